// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "homeseq/error.hpp"
#include "homeseq/timefeatures.hpp"
#include "oracles.hpp"

using namespace homeseq;
using fixtures::off;
using fixtures::on;

namespace {

std::vector<FeaturePoint> to_points(const std::vector<oracle::Point>& pts) {
  return {pts.begin(), pts.end()};
}

double sq(double x) { return x * x; }

// Hall sensor fired at two distinct times of day with two distinct gaps.
SymbolSequence two_habit_sequence(std::size_t days) {
  SensorRegistry reg({{1, "m", SensorKind::motion, "hall", '\0'},
                      {2, "d", SensorKind::magnetic, "hall", '\0'}});
  std::vector<SensorEvent> ev;
  std::mt19937_64 rng(1);
  for (std::size_t d = 0; d < days; ++d) {
    const std::int64_t base = static_cast<std::int64_t>(d) * 86400;
    const std::int64_t morning = base + 7 * 3600 + static_cast<std::int64_t>(rng() % 600);
    ev.push_back(on(morning, 1));
    ev.push_back(off(morning + 20 + static_cast<std::int64_t>(rng() % 10), 2));
    const std::int64_t evening = base + 20 * 3600 + static_cast<std::int64_t>(rng() % 600);
    ev.push_back(on(evening, 1));
    ev.push_back(off(evening + 3000 + static_cast<std::int64_t>(rng() % 300), 2));
  }
  return speed_encode(ev, reg);
}

}  // namespace

TEST(Buckets, FourClassBoundaries) {
  const auto s = TimeBucketScheme::four_class();
  EXPECT_EQ(s.arity(), 4u);
  EXPECT_EQ(bucketize(30, s), 0u);
  EXPECT_EQ(bucketize(90 * 60, s), 3u);
  EXPECT_EQ(bucketize(60, s), 1u);
  EXPECT_EQ(bucketize(59, s), 0u);
  EXPECT_EQ(bucketize(0, s), 0u);
  EXPECT_EQ(bucketize(15 * 60, s), 2u);
  EXPECT_EQ(bucketize(3600, s), 3u);
  EXPECT_THROW(bucketize(-1, s), ValidationError);
}

TEST(Buckets, EightClassAddsOverFiveHours) {
  const auto s = TimeBucketScheme::eight_class();
  EXPECT_EQ(s.arity(), 8u);
  EXPECT_EQ(s.names().back(), ">5h");
  EXPECT_EQ(bucketize(5 * 3600 - 1, s), 6u);
  EXPECT_EQ(bucketize(5 * 3600, s), 7u);
  EXPECT_EQ(bucketize(4 * 60, s), 1u);
}

TEST(Buckets, TotalMonotoneStep) {
  for (const auto& s : {TimeBucketScheme::four_class(), TimeBucketScheme::eight_class()}) {
    std::size_t prev = 0;
    for (std::int64_t t = 0; t < 8 * 3600; t += 7) {
      const auto b = bucketize(t, s);
      ASSERT_LT(b, s.arity());
      ASSERT_GE(b, prev);
      ASSERT_LE(b, prev + 1);
      prev = b;
    }
    EXPECT_EQ(prev, s.arity() - 1);
  }
  EXPECT_THROW(TimeBucketScheme({60, 60}, {"a", "b", "c"}), ConfigError);
  EXPECT_THROW(TimeBucketScheme({60}, {"a"}), ConfigError);
}

TEST(KMeans, TwoPairsOfIdenticalPoints) {
  std::vector<FeaturePoint> pts{{0.1, 0.1}, {0.1, 0.1}, {0.9, 0.7}, {0.9, 0.7}};
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto r = kmeans_fit(pts, 2, seed);
    EXPECT_DOUBLE_EQ(r.ssd, 0.0);
    std::vector<FeaturePoint> c = r.centroids;
    std::sort(c.begin(), c.end());
    EXPECT_EQ(c[0], (FeaturePoint{0.1, 0.1}));
    EXPECT_EQ(c[1], (FeaturePoint{0.9, 0.7}));
  }
}

TEST(KMeans, SingleClusterIsTheMean) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<FeaturePoint> pts(37);
  for (auto& p : pts) p = {u(rng), u(rng)};
  double mx = 0, my = 0;
  for (auto& p : pts) mx += p[0], my += p[1];
  mx /= 37, my /= 37;
  double dev = 0;
  for (auto& p : pts) dev += sq(p[0] - mx) + sq(p[1] - my);
  auto r = kmeans_fit(pts, 1, 9);
  EXPECT_NEAR(r.centroids[0][0], mx, 1e-12);
  EXPECT_NEAR(r.centroids[0][1], my, 1e-12);
  EXPECT_NEAR(r.ssd, dev, 1e-12);
}

TEST(KMeans, ErrorsOnBadK) {
  std::vector<FeaturePoint> pts{{0, 0}, {1, 1}};
  EXPECT_THROW(kmeans_fit(pts, 3, 1), ConfigError);
  EXPECT_THROW(kmeans_fit(pts, 0, 1), ConfigError);
}

TEST(KMeans, TraceNonIncreasingAndFixpoint) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<FeaturePoint> pts(50 + rng() % 100);
    for (auto& p : pts) p = {u(rng), u(rng)};
    const std::size_t k = 1 + rng() % 8;
    auto r = kmeans_fit(pts, k, trial);
    for (std::size_t i = 1; i < r.ssd_trace.size(); ++i)
      EXPECT_LE(r.ssd_trace[i], r.ssd_trace[i - 1] + 1e-12);
    if (r.iterations < kMaxLloydIterations) {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& own = r.centroids[r.assignment[i]];
        for (const auto& c : r.centroids)
          EXPECT_LE(sq(pts[i][0] - own[0]) + sq(pts[i][1] - own[1]),
                    sq(pts[i][0] - c[0]) + sq(pts[i][1] - c[1]) + 1e-12);
      }
    }
    auto again = kmeans_fit(pts, k, trial);
    EXPECT_EQ(again.assignment, r.assignment);
    EXPECT_EQ(again.ssd, r.ssd);
  }
}

TEST(KMeans, PlantedBlobsMatchMultiRestartOracle) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = oracle::planted_blobs(40, 3, rng);
    const double best = oracle::kmeans_best_ssd(pts, 3, 50, trial);
    const auto fp = to_points(pts);
    EXPECT_LE(kmeans_fit(fp, 3, trial).ssd, best * 1.01);
  }
}

TEST(KMeans, PathIsNonIncreasing) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<FeaturePoint> pts(10 + rng() % 60);
    for (auto& p : pts) p = {u(rng), u(rng)};
    auto path = kmeans_path(pts, kMaxClusters, trial);
    ASSERT_EQ(path.size(), std::min(kMaxClusters, pts.size()));
    for (std::size_t k = 1; k < path.size(); ++k) EXPECT_LE(path[k].ssd, path[k - 1].ssd);
  }
}

TEST(Elbow, DominantDropAtTwo) {
  const std::vector<double> curve{100, 20, 18, 17, 16.5, 16.2, 16.1, 16.05};
  EXPECT_EQ(elbow_select(curve), 2u);
}

TEST(Elbow, FlatCurveFallsBackToTwo) {
  const std::vector<double> curve(8, 10.0);
  EXPECT_EQ(elbow_select(curve), 2u);
}

TEST(Elbow, IncreasingCurveIsRejected) {
  const std::vector<double> curve{10, 8, 9, 7, 6, 5, 4, 3};
  EXPECT_THROW(elbow_select(curve), ValidationError);
}

TEST(Elbow, PlantedThreeClusters) {
  std::mt19937_64 rng(21);
  int hits = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = to_points(oracle::planted_blobs(50, 3, rng));
    std::vector<double> curve;
    for (const auto& r : kmeans_path(pts, kMaxClusters, trial)) curve.push_back(r.ssd);
    hits += elbow_select(curve) == 3;
  }
  EXPECT_GE(hits, 19);
}

TEST(Annotate, TableGapsInFourBuckets) {
  SensorRegistry reg({{4, "a", SensorKind::motion, "hall", '\0'},
                      {10, "b", SensorKind::magnetic, "kitchen", '\0'}});
  const auto seq = speed_encode(std::vector{on(0, 4), on(22, 10), off(265, 10)}, reg);
  const auto ann = annotate(seq, TimeMode::bucket4);
  EXPECT_EQ(ann.to_text(), "A@^ B@<1min b@1-15min");
  EXPECT_EQ(ann.tokens[0], ann.vocabulary.start_index());
  EXPECT_EQ(ann.vocabulary.size(), 16u);

  const auto leak = annotate(seq, TimeMode::bucket4, nullptr, TimeReference::to_next);
  EXPECT_EQ(leak.to_text(), "A@<1min B@1-15min b@^");
}

TEST(Annotate, SingleTokenGetsStart) {
  SensorRegistry reg({{4, "a", SensorKind::motion, "hall", '\0'}});
  const auto ann = annotate(speed_encode(std::vector{on(0, 4)}, reg), TimeMode::bucket8);
  EXPECT_EQ(ann.to_text(), "A@^");
}

TEST(Annotate, PreservesLengthAndSensorComponents) {
  const auto seq = two_habit_sequence(30);
  TimeClusterModel model = TimeClusterModel::fit(seq, 3);
  for (auto mode : {TimeMode::bucket4, TimeMode::bucket8, TimeMode::kcluster}) {
    const auto ann = annotate(seq, mode, &model);
    ASSERT_EQ(ann.size(), seq.size());
    EXPECT_EQ(ann.base_tokens, seq.base_tokens);
    for (std::size_t i = 1; i < ann.size(); ++i)
      EXPECT_EQ(ann.vocabulary.decompose(ann.tokens[i]).first, seq.tokens[i]);
  }
  EXPECT_THROW(annotate(seq, TimeMode::kcluster), ConfigError);
}

TEST(TimeClusters, FindsTwoHabitsAndRoundTrips) {
  const auto seq = two_habit_sequence(40);
  auto model = TimeClusterModel::fit(seq, 5);
  ASSERT_EQ(model.sensors().size(), 4u);
  const auto& motion_on = model.sensors()[0];
  EXPECT_EQ(motion_on.k, 2u);
  for (const auto& s : model.sensors())
    for (std::size_t k = 1; k < s.ssd_curve.size(); ++k)
      EXPECT_LE(s.ssd_curve[k], s.ssd_curve[k - 1]);
  // Morning and evening events of the same token land in different clusters.
  EXPECT_NE(model.assign(0, 7.05, 25), model.assign(0, 20.05, 3100));
  const auto again = TimeClusterModel::from_text(model.to_text());
  EXPECT_EQ(again.to_text(), model.to_text());
  EXPECT_EQ(again.assign(0, 7.05, 25), model.assign(0, 7.05, 25));
}

TEST(TimeClusters, ForcedSingleClusterIsIsomorphicToPlain) {
  const auto seq = two_habit_sequence(10);
  TimeClusterModel model;
  model.force_k(seq, 1, 2);
  EXPECT_EQ(model.max_k(), 1u);
  const auto ann = annotate(seq, TimeMode::kcluster, &model);
  EXPECT_EQ(ann.vocabulary.size(), seq.vocabulary.size());
  for (std::size_t i = 1; i < ann.size(); ++i) EXPECT_EQ(ann.tokens[i], seq.tokens[i]);
}
