// SPDX-License-Identifier: Apache-2.0
#include "homeseq/ppm.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace homeseq {

FrequencyTrie::FrequencyTrie(std::size_t alphabet_size, std::size_t max_depth)
    : alphabet_size_(alphabet_size), max_depth_(max_depth), nodes_(1) {
  if (alphabet_size == 0) throw ConfigError("frequency trie needs a non-empty alphabet");
}

std::uint32_t FrequencyTrie::child(std::uint32_t node, TokenId symbol) const {
  const auto& ch = nodes_[node].children;
  auto it = std::lower_bound(ch.begin(), ch.end(), symbol,
                             [](const auto& p, TokenId s) { return p.first < s; });
  return it != ch.end() && it->first == symbol ? it->second : 0;
}

std::uint32_t FrequencyTrie::child_or_create(std::uint32_t node, TokenId symbol) {
  if (symbol >= alphabet_size_) throw ConfigError("symbol outside the trie alphabet");
  auto& ch = nodes_[node].children;
  auto it = std::lower_bound(ch.begin(), ch.end(), symbol,
                             [](const auto& p, TokenId s) { return p.first < s; });
  if (it != ch.end() && it->first == symbol) return it->second;
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  ch.insert(it, {symbol, index});  // invalidates `ch` only via nodes_ growth below
  nodes_.push_back(Node{symbol, 0, {}});
  return index;
}

std::uint32_t FrequencyTrie::walk_or_create(std::span<const TokenId> path, bool increment_all) {
  if (path.size() > max_depth_) throw ConfigError("trie path deeper than the model order");
  std::uint32_t node = 0;
  for (TokenId s : path) {
    node = child_or_create(node, s);
    if (increment_all) ++nodes_[node].count;
  }
  return node;
}

void FrequencyTrie::add_path(std::span<const TokenId> path) { walk_or_create(path, true); }

void FrequencyTrie::add_terminal(std::span<const TokenId> path) {
  if (path.empty()) return;
  ++nodes_[walk_or_create(path, false)].count;
}

std::uint64_t FrequencyTrie::count(std::span<const TokenId> path) const {
  std::uint32_t node = 0;
  for (TokenId s : path) {
    node = child(node, s);
    if (node == 0) return 0;
  }
  return path.empty() ? 0 : nodes_[node].count;
}

bool FrequencyTrie::child_counts(std::span<const TokenId> context,
                                 std::vector<std::uint64_t>& counts) const {
  std::uint32_t node = 0;
  for (TokenId s : context) {
    node = child(node, s);
    if (node == 0) return false;
  }
  counts.assign(alphabet_size_, 0);
  for (const auto& [sym, idx] : nodes_[node].children) counts[sym] = nodes_[idx].count;
  return true;
}

std::string FrequencyTrie::dump(const Vocabulary* vocabulary) const {
  std::ostringstream os;
  std::function<void(std::uint32_t, int)> rec = [&](std::uint32_t node, int depth) {
    for (const auto& [sym, idx] : nodes_[node].children) {
      os << std::string(static_cast<std::size_t>(depth) * 2, ' ');
      if (vocabulary)
        os << vocabulary->token(sym);
      else
        os << sym;
      os << ":" << nodes_[idx].count << "\n";
      rec(idx, depth + 1);
    }
  };
  rec(0, 0);
  return os.str();
}

bool FrequencyTrie::operator==(const FrequencyTrie& other) const {
  if (alphabet_size_ != other.alphabet_size_ || max_depth_ != other.max_depth_) return false;
  std::function<bool(std::uint32_t, std::uint32_t)> eq = [&](std::uint32_t a, std::uint32_t b) {
    const auto& na = nodes_[a];
    const auto& nb = other.nodes_[b];
    if (na.count != nb.count || na.children.size() != nb.children.size()) return false;
    for (std::size_t i = 0; i < na.children.size(); ++i)
      if (na.children[i].first != nb.children[i].first ||
          !eq(na.children[i].second, nb.children[i].second))
        return false;
    return true;
  };
  return eq(0, 0);
}

std::string_view to_string(PpmFrontend frontend) {
  return frontend == PpmFrontend::alz ? "alz" : "speed";
}

// ---------------------------------------------------------------------------

std::size_t lz78_longest_phrase(std::span<const std::vector<TokenId>> segments) {
  std::map<std::vector<TokenId>, bool> dictionary;
  std::size_t longest = 0;
  for (const auto& seg : segments) {
    std::vector<TokenId> phrase;
    for (TokenId s : seg) {
      phrase.push_back(s);
      if (dictionary.emplace(phrase, true).second) {
        longest = std::max(longest, phrase.size());
        phrase.clear();
      }
    }
    longest = std::max(longest, phrase.size());  // trailing phrase already known
  }
  return longest;
}

std::vector<std::vector<TokenId>> speed_episodes(std::span<const TokenId> symbols) {
  std::vector<std::vector<TokenId>> episodes;
  std::vector<TokenId> current;
  for (TokenId s : symbols) {
    if (std::find(current.begin(), current.end(), s) != current.end()) {
      episodes.push_back(std::move(current));
      current.clear();
    }
    current.push_back(s);
  }
  if (!current.empty()) episodes.push_back(std::move(current));
  return episodes;
}

namespace {

std::size_t cap_depth(std::size_t depth, std::size_t max_order) {
  depth = std::max<std::size_t>(depth, 1);
  return max_order > 0 ? std::min(depth, max_order) : depth;
}

}  // namespace

FrequencyTrie build_trie_alz(std::span<const std::vector<TokenId>> segments,
                             std::size_t alphabet_size, std::size_t max_order) {
  const std::size_t depth = cap_depth(lz78_longest_phrase(segments), max_order);
  FrequencyTrie trie(alphabet_size, depth);
  for (const auto& seg : segments) {
    for (std::size_t t = 0; t < seg.size(); ++t) {
      const std::size_t begin = t + 1 >= depth ? t + 1 - depth : 0;
      for (std::size_t j = begin; j <= t; ++j)
        trie.add_terminal(std::span<const TokenId>(seg.data() + j, t + 1 - j));
    }
  }
  return trie;
}

FrequencyTrie build_trie_alz(std::span<const TokenId> symbols, std::size_t alphabet_size,
                             std::size_t max_order) {
  const std::vector<std::vector<TokenId>> one{{symbols.begin(), symbols.end()}};
  return build_trie_alz(one, alphabet_size, max_order);
}

FrequencyTrie build_trie_speed(std::span<const std::vector<TokenId>> segments,
                               std::size_t alphabet_size, std::size_t max_order) {
  std::vector<std::vector<TokenId>> episodes;
  std::size_t longest = 0;
  for (const auto& seg : segments)
    for (auto& ep : speed_episodes(seg)) {
      longest = std::max(longest, ep.size());
      episodes.push_back(std::move(ep));
    }
  const std::size_t depth = cap_depth(longest, max_order);
  FrequencyTrie trie(alphabet_size, depth);
  for (const auto& ep : episodes)
    for (std::size_t j = 0; j < ep.size(); ++j) {
      const std::size_t len = std::min(ep.size() - j, depth);
      trie.add_path(std::span<const TokenId>(ep.data() + j, len));
    }
  return trie;
}

FrequencyTrie build_trie_speed(std::span<const TokenId> symbols, std::size_t alphabet_size,
                               std::size_t max_order) {
  const std::vector<std::vector<TokenId>> one{{symbols.begin(), symbols.end()}};
  return build_trie_speed(one, alphabet_size, max_order);
}

std::vector<double> ppm_distribution(const FrequencyTrie& trie, std::span<const TokenId> context) {
  const std::size_t n = trie.alphabet_size();
  std::vector<double> p(n, 1.0 / static_cast<double>(n));
  const std::size_t order = std::min(context.size(), trie.max_depth() - 1);
  std::vector<std::uint64_t> counts;
  for (std::size_t k = 0; k <= order; ++k) {
    const auto ctx = context.last(k);
    if (!trie.child_counts(ctx, counts)) break;  // longer contexts are absent too
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) continue;
    const double denom = static_cast<double>(total) + 1.0;
    for (std::size_t s = 0; s < n; ++s) p[s] = (static_cast<double>(counts[s]) + p[s]) / denom;
  }
  return p;
}

TokenId predict_next(const FrequencyTrie& trie, std::span<const TokenId> context) {
  const auto p = ppm_distribution(trie, context);
  return static_cast<TokenId>(std::max_element(p.begin(), p.end()) - p.begin());
}

PpmModel::PpmModel(PpmConfig config, std::size_t alphabet_size)
    : config_(config), trie_(alphabet_size, 1) {}

void PpmModel::fit(std::span<const std::vector<TokenId>> segments) {
  trie_ = config_.frontend == PpmFrontend::alz
              ? build_trie_alz(segments, trie_.alphabet_size(), config_.max_order)
              : build_trie_speed(segments, trie_.alphabet_size(), config_.max_order);
}

}  // namespace homeseq
