// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "homeseq/symbolization.hpp"

namespace homeseq {

/// Partition of elapsed time [0, inf) into left-closed buckets [lo, hi).
class TimeBucketScheme {
 public:
  /// `upper_edges` are the exclusive upper bounds of every bucket but the
  /// last, in seconds; strictly increasing and positive.
  TimeBucketScheme(std::vector<std::int64_t> upper_edges, std::vector<std::string> names);

  /// <1min, 1-15min, 15min-1h, >1h
  static TimeBucketScheme four_class();
  /// <1min, 1-5min, 5-15min, 15-30min, 30min-1h, 1-2h, 2-5h, >5h
  static TimeBucketScheme eight_class();

  std::size_t arity() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::int64_t>& upper_edges() const { return edges_; }

 private:
  std::vector<std::int64_t> edges_;
  std::vector<std::string> names_;
};

std::size_t bucketize(std::int64_t elapsed_seconds, const TimeBucketScheme& scheme);

// --- k-means ---------------------------------------------------------------

using FeaturePoint = std::array<double, 2>;

struct KMeansResult {
  std::vector<FeaturePoint> centroids;
  std::vector<std::size_t> assignment;
  double ssd = 0.0;
  /// SSD after every assignment step; non-increasing.
  std::vector<double> ssd_trace;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kMaxLloydIterations = 100;
inline constexpr std::size_t kMaxClusters = 8;

/// Lloyd's algorithm from farthest-point seeding (first centroid picked by
/// `seed`). Runs to an assignment fixpoint or kMaxLloydIterations.
KMeansResult kmeans_fit(std::span<const FeaturePoint> points, std::size_t k, std::uint64_t seed);

/// Fits K = 1..k_max; every entry's SSD is <= the previous one's.
std::vector<KMeansResult> kmeans_path(std::span<const FeaturePoint> points, std::size_t k_max,
                                      std::uint64_t seed);

/// K at the largest second difference of the SSD curve (curve[0] is K=1).
/// Ties pick the smallest K; a curve with no positive second difference gives 2.
std::size_t elbow_select(std::span<const double> ssd_curve);

// --- per-sensor time clusters ----------------------------------------------

struct SensorTimeClusters {
  std::string token;  // base token this model belongs to
  std::size_t k = 1;
  std::vector<FeaturePoint> centroids;  // normalized feature space
  std::vector<double> ssd_curve;        // K = 1..len
  double log_elapsed_max = 1.0;         // log(1 + max elapsed-to-next)
  std::size_t samples = 0;
};

/// Per base token K-means over (hour-of-day / 24, log(1+dt) / log(1+dt_max))
/// where dt is the time elapsed to the following event.
class TimeClusterModel {
 public:
  TimeClusterModel() = default;

  static TimeClusterModel fit(const SymbolSequence& sequence, std::uint64_t seed,
                              std::span<const std::pair<std::size_t, std::size_t>> ranges = {});

  const Vocabulary& base_vocabulary() const { return base_; }
  const std::vector<SensorTimeClusters>& sensors() const { return sensors_; }
  std::size_t max_k() const;

  FeaturePoint normalize(TokenId base_token, double hour, std::int64_t elapsed) const;
  std::size_t assign(TokenId base_token, double hour, std::int64_t elapsed) const;

  /// Overrides every sensor's K (refitting centroids); used for degenerate checks.
  void force_k(const SymbolSequence& sequence, std::size_t k, std::uint64_t seed);

  std::string to_text() const;
  static TimeClusterModel from_text(std::string_view text);
  std::string ssd_csv() const;

 private:
  Vocabulary base_;
  std::vector<SensorTimeClusters> sensors_;
};

// --- composite tokens --------------------------------------------------------

enum class TimeMode { none, bucket4, bucket8, kcluster };

std::string_view to_string(TimeMode mode);
TimeMode time_mode_from_string(std::string_view text);

/// Which gap a token's time component describes.
enum class TimeReference {
  /// Gap from the previous event to this one. Causal; the time component of
  /// token t+1 equals what a joint predictor must forecast after token t.
  since_previous,
  /// Gap from this event to the next one (leaks the next event's timing).
  to_next,
};

/// Pairs every token with a time token. In kcluster mode the gap is described
/// by the cluster of the event that opens it. Positions without a defined gap
/// get the START index.
SymbolSequence annotate(const SymbolSequence& sequence, TimeMode mode,
                        const TimeClusterModel* model = nullptr,
                        TimeReference reference = TimeReference::since_previous);

}  // namespace homeseq
