// SPDX-License-Identifier: Apache-2.0
#include "homeseq/symbolization.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace homeseq {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] == kStart) throw ConfigError("token '^' is reserved");
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
      throw ConfigError("duplicate token '" + tokens_[i] + "'");
  }
}

Vocabulary Vocabulary::composite(const Vocabulary& base, std::vector<std::string> time_names) {
  if (time_names.empty()) throw ConfigError("composite vocabulary needs at least one time token");
  std::vector<std::string> tokens;
  tokens.reserve(base.size() * time_names.size());
  for (const auto& b : base.tokens())
    for (const auto& t : time_names) tokens.push_back(b + "@" + t);
  Vocabulary v(std::move(tokens));
  v.base_tokens_ = base.tokens();
  v.time_names_ = std::move(time_names);
  return v;
}

const std::string& Vocabulary::token(TokenId id) const {
  static const std::string kStartString(kStart);
  if (id == start_index()) return kStartString;
  if (id > start_index()) throw ConfigError("token index " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::compose(TokenId base, std::size_t time) const {
  if (!is_composite()) {
    if (time != 0) throw ConfigError("plain vocabulary has a single time slot");
    return base;
  }
  if (base >= base_size() || time >= time_arity()) throw ConfigError("compose: index out of range");
  return static_cast<TokenId>(base * time_arity() + time);
}

std::pair<TokenId, std::size_t> Vocabulary::decompose(TokenId id) const {
  if (!is_composite()) throw ConfigError("vocabulary is not composite");
  if (id >= size()) throw ConfigError("decompose: index out of range");
  return {static_cast<TokenId>(id / time_arity()), id % time_arity()};
}

std::string SymbolSequence::to_text() const {
  std::string out;
  const bool plain = !vocabulary.is_composite() &&
                     std::all_of(vocabulary.tokens().begin(), vocabulary.tokens().end(),
                                 [](const std::string& t) { return t.size() == 1; });
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!plain && i > 0) out += ' ';
    if (tokens[i] == vocabulary.start_index() && vocabulary.is_composite())
      out += vocabulary.base_tokens()[base_tokens[i]] + "@" + std::string(Vocabulary::kStart);
    else
      out += vocabulary.token(tokens[i]);
  }
  return out;
}

std::string SymbolSequence::metadata_csv() const {
  std::ostringstream os;
  os << "index,token,timestamp,sensor_id,state,since_previous,to_next\n";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& m = meta[i];
    os << i << "," << (tokens[i] == vocabulary.start_index() && vocabulary.is_composite()
                           ? vocabulary.base_tokens()[base_tokens[i]] + "@^"
                           : vocabulary.token(tokens[i]))
       << "," << m.timestamp.format() << "," << m.sensor_id << ","
       << (m.state == SensorState::on ? 1 : 0) << ",";
    if (m.since_previous) os << *m.since_previous;
    os << ",";
    if (m.to_next) os << *m.to_next;
    os << "\n";
  }
  return os.str();
}

namespace {

std::string upper(char letter) {
  return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(letter))));
}

SymbolSequence encode(std::span<const SensorEvent> events, const SensorRegistry& registry,
                      Vocabulary vocabulary, bool keep_off) {
  SymbolSequence seq;
  seq.vocabulary = std::move(vocabulary);
  for (const auto& e : events) {
    if (!e.is_on() && !keep_off) continue;
    if (!registry.contains(e.sensor_id))
      throw ValidationError("sensor " + std::to_string(e.sensor_id) + " has no assigned letter");
    const SensorInfo& info = registry.at(e.sensor_id);
    const std::string token = e.is_on() ? upper(info.letter) : std::string(1, info.letter);
    const TokenId id = *seq.vocabulary.index_of(token);
    seq.tokens.push_back(id);
    seq.base_tokens.push_back(id);
    TokenMeta m{e.timestamp, e.sensor_id, e.state, std::nullopt, std::nullopt};
    if (!seq.meta.empty()) {
      const std::int64_t gap = e.timestamp.seconds - seq.meta.back().timestamp.seconds;
      m.since_previous = gap;
      seq.meta.back().to_next = gap;
    }
    seq.meta.push_back(m);
  }
  return seq;
}

}  // namespace

Vocabulary speed_vocabulary(const SensorRegistry& registry) {
  std::vector<std::string> tokens;
  for (const auto& s : registry.sensors()) {
    tokens.push_back(upper(s.letter));
    tokens.emplace_back(1, s.letter);
  }
  return Vocabulary(std::move(tokens));
}

SymbolSequence speed_encode(std::span<const SensorEvent> events, const SensorRegistry& registry) {
  return encode(events, registry, speed_vocabulary(registry), true);
}

Vocabulary alz_vocabulary(const SensorRegistry& registry, const AlzOptions& options) {
  if (options.include_off) return speed_vocabulary(registry);
  std::vector<std::string> tokens;
  for (const auto& s : registry.sensors()) tokens.push_back(upper(s.letter));
  return Vocabulary(std::move(tokens));
}

SymbolSequence alz_encode(std::span<const SensorEvent> events, const SensorRegistry& registry,
                          const AlzOptions& options) {
  return encode(events, registry, alz_vocabulary(registry, options), options.include_off);
}

std::vector<std::pair<SensorId, SensorState>> speed_decode(const SymbolSequence& sequence,
                                                           const SensorRegistry& registry) {
  std::vector<std::pair<SensorId, SensorState>> out;
  out.reserve(sequence.size());
  for (TokenId base : sequence.base_tokens) {
    const std::string& token = sequence.vocabulary.base_tokens().at(base);
    const SensorInfo* info = registry.find_by_letter(token.at(0));
    if (!info) throw ValidationError("no sensor for token '" + token + "'");
    const bool on = std::isupper(static_cast<unsigned char>(token[0])) != 0;
    out.emplace_back(info->id, on ? SensorState::on : SensorState::off);
  }
  return out;
}

}  // namespace homeseq
