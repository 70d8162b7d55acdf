// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "homeseq/symbolization.hpp"

namespace homeseq {

/// Rooted trie of symbol patterns with occurrence counts, depth-limited.
class FrequencyTrie {
 public:
  struct Node {
    TokenId symbol = 0;
    std::uint64_t count = 0;
    std::vector<std::pair<TokenId, std::uint32_t>> children;  // sorted by symbol
  };

  FrequencyTrie(std::size_t alphabet_size, std::size_t max_depth);

  std::size_t alphabet_size() const { return alphabet_size_; }
  std::size_t max_depth() const { return max_depth_; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Increments every node along `path` (prefix counting).
  void add_path(std::span<const TokenId> path);
  /// Increments only the node at the end of `path`, creating intermediates.
  void add_terminal(std::span<const TokenId> path);

  /// Count stored at the node for `path` (0 if absent).
  std::uint64_t count(std::span<const TokenId> path) const;
  /// Child counts of the node for `context`, indexed by symbol. Returns false
  /// if the node does not exist.
  bool child_counts(std::span<const TokenId> context, std::vector<std::uint64_t>& counts) const;

  /// Indented "symbol:count" dump, children in symbol order.
  std::string dump(const Vocabulary* vocabulary = nullptr) const;

  bool operator==(const FrequencyTrie& other) const;

 private:
  std::uint32_t child(std::uint32_t node, TokenId symbol) const;
  std::uint32_t child_or_create(std::uint32_t node, TokenId symbol);
  std::uint32_t walk_or_create(std::span<const TokenId> path, bool increment_all);

  std::size_t alphabet_size_;
  std::size_t max_depth_;
  std::vector<Node> nodes_;  // nodes_[0] is the root
};

enum class PpmFrontend { alz, speed };

std::string_view to_string(PpmFrontend frontend);

struct PpmConfig {
  PpmFrontend frontend = PpmFrontend::speed;
  /// Upper bound on the trie depth; 0 keeps the depth the frontend derives.
  std::size_t max_order = 0;
};

/// LZ78 phrase lengths of `symbols` continuing a shared dictionary across
/// segments; returns the longest phrase length.
std::size_t lz78_longest_phrase(std::span<const std::vector<TokenId>> segments);

/// Greedy split into maximal windows without a repeated symbol.
std::vector<std::vector<TokenId>> speed_episodes(std::span<const TokenId> symbols);

/// Active-LeZi-style trie: depth D = longest LZ78 phrase; for every position
/// the window of the last D symbols has each of its suffixes counted once.
/// Windows never span segment boundaries.
FrequencyTrie build_trie_alz(std::span<const std::vector<TokenId>> segments,
                             std::size_t alphabet_size, std::size_t max_order = 0);
FrequencyTrie build_trie_alz(std::span<const TokenId> symbols, std::size_t alphabet_size,
                             std::size_t max_order = 0);

/// Episode trie: every suffix of every repeat-free episode inserted with
/// prefix counting; depth = longest episode.
FrequencyTrie build_trie_speed(std::span<const std::vector<TokenId>> segments,
                               std::size_t alphabet_size, std::size_t max_order = 0);
FrequencyTrie build_trie_speed(std::span<const TokenId> symbols, std::size_t alphabet_size,
                               std::size_t max_order = 0);

/// Escape-blended distribution. With context c of order k (the k most recent
/// symbols, k <= D-1):
///   P_k(s) = (n(c,s) + P_{k-1}(s)) / (N(c) + 1),   P_{-1}(s) = 1/|alphabet|
std::vector<double> ppm_distribution(const FrequencyTrie& trie, std::span<const TokenId> context);

/// argmax of ppm_distribution, ties to the lowest index.
TokenId predict_next(const FrequencyTrie& trie, std::span<const TokenId> context);

/// A fitted trie together with the frontend that built it.
class PpmModel {
 public:
  PpmModel(PpmConfig config, std::size_t alphabet_size);

  void fit(std::span<const std::vector<TokenId>> segments);
  const FrequencyTrie& trie() const { return trie_; }
  const PpmConfig& config() const { return config_; }
  TokenId predict(std::span<const TokenId> context) const { return predict_next(trie_, context); }

 private:
  PpmConfig config_;
  FrequencyTrie trie_;
};

}  // namespace homeseq
