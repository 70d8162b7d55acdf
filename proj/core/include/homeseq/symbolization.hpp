// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "homeseq/events.hpp"

namespace homeseq {

using TokenId = std::uint32_t;

/// Dense token universe. Index size() is reserved for the START marker: it is
/// a valid model input (padding, unknown time) but never a prediction target.
///
/// A composite vocabulary pairs every base token with every time token; the
/// composite index is base * time_arity + time.
class Vocabulary {
 public:
  static constexpr std::string_view kStart = "^";

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);
  static Vocabulary composite(const Vocabulary& base, std::vector<std::string> time_names);

  std::size_t size() const { return tokens_.size(); }
  TokenId start_index() const { return static_cast<TokenId>(tokens_.size()); }
  std::size_t input_width() const { return tokens_.size() + 1; }

  const std::string& token(TokenId id) const;
  std::optional<TokenId> index_of(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool is_composite() const { return !time_names_.empty(); }
  std::size_t base_size() const { return is_composite() ? base_tokens_.size() : size(); }
  std::size_t time_arity() const { return is_composite() ? time_names_.size() : 1; }
  const std::vector<std::string>& base_tokens() const { return is_composite() ? base_tokens_ : tokens_; }
  const std::vector<std::string>& time_names() const { return time_names_; }

  TokenId compose(TokenId base, std::size_t time) const;
  /// (base, time) of a composite index. Throws ConfigError for plain vocabularies.
  std::pair<TokenId, std::size_t> decompose(TokenId id) const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && time_names_ == other.time_names_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::string> base_tokens_;
  std::vector<std::string> time_names_;
  std::unordered_map<std::string, TokenId> index_;
};

struct TokenMeta {
  Timestamp timestamp;
  SensorId sensor_id = 0;
  SensorState state = SensorState::off;
  std::optional<std::int64_t> since_previous;
  std::optional<std::int64_t> to_next;
};

/// Token stream in temporal order with per-token metadata.
struct SymbolSequence {
  Vocabulary vocabulary;
  std::vector<TokenId> tokens;       // may contain vocabulary.start_index()
  std::vector<TokenId> base_tokens;  // sensor component (equals tokens for plain text)
  std::vector<TokenMeta> meta;

  std::size_t size() const { return tokens.size(); }
  /// Plain text concatenates single-letter tokens; composite text is space separated.
  std::string to_text() const;
  std::string metadata_csv() const;
};

/// Upper/lower case letter per on/off event; one token per event.
Vocabulary speed_vocabulary(const SensorRegistry& registry);
SymbolSequence speed_encode(std::span<const SensorEvent> events, const SensorRegistry& registry);

struct AlzOptions {
  /// Keep off events (as lower-case letters) instead of dropping them.
  bool include_off = false;
};

Vocabulary alz_vocabulary(const SensorRegistry& registry, const AlzOptions& options = {});
/// Activation-only text: one upper-case token per "on" event.
SymbolSequence alz_encode(std::span<const SensorEvent> events, const SensorRegistry& registry,
                          const AlzOptions& options = {});

/// Inverse of speed_encode on the (sensor, state) components.
std::vector<std::pair<SensorId, SensorState>> speed_decode(const SymbolSequence& sequence,
                                                           const SensorRegistry& registry);

}  // namespace homeseq
