// SPDX-License-Identifier: Apache-2.0
// Slow, obviously-correct reimplementations used as test references. None of
// these call into the library code they check.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "homeseq/events.hpp"
#include "homeseq/lstm.hpp"

namespace oracle {

using Seq = std::vector<std::uint32_t>;
using Counts = std::map<Seq, std::uint64_t>;

// Occurrences of every substring of length 1..max_len inside each segment.
Counts substring_counts(const std::vector<Seq>& segments, std::size_t max_len);

// Greedy left-to-right cut: a new piece starts whenever the next symbol is
// already in the current piece.
std::vector<Seq> repeat_free_pieces(const Seq& s);

// Longest phrase of an LZ78 parse whose dictionary is shared by all segments;
// an unfinished phrase at a segment's end still counts.
std::size_t lz78_longest(const std::vector<Seq>& segments);

// Escape-blended next-symbol probabilities computed straight from a count
// table: order from -1 up to min(|ctx|, depth-1).
std::vector<double> blended(const Counts& counts, std::size_t alphabet, std::size_t depth,
                            const Seq& context);

// Scalar LSTM forward pass with plain loops (gates i, f, g, o).
std::vector<double> lstm_forward(const homeseq::LstmParameters& p, const Seq& window);
double lstm_mean_loss(const homeseq::LstmParameters& p, const std::vector<Seq>& windows,
                      const Seq& targets);

// Every room sequence from a to b of minimal length, sorted.
std::vector<std::vector<std::string>> all_shortest_paths(const homeseq::ApartmentGraph& g,
                                                         const std::string& a,
                                                         const std::string& b);

// True when a and b are the same or adjacent rooms, or when some shortest
// path between them only crosses rooms without motion sensors.
bool pair_ok(const homeseq::ApartmentGraph& g, const homeseq::SensorRegistry& r,
             const std::string& a, const std::string& b);

std::size_t violations(const std::vector<homeseq::SensorEvent>& events,
                       const homeseq::ApartmentGraph& g, const homeseq::SensorRegistry& r);

using Point = std::array<double, 2>;

// Lloyd from `restarts` random initial picks; returns the smallest SSD.
double kmeans_best_ssd(const std::vector<Point>& pts, std::size_t k, std::size_t restarts,
                       std::uint64_t seed);

// Three well separated Gaussian blobs inside the unit square.
std::vector<Point> planted_blobs(std::size_t per_blob, std::size_t blobs, std::mt19937_64& rng);

}  // namespace oracle
