// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "homeseq/timefeatures.hpp"

using namespace homeseq;

namespace {

std::vector<FeaturePoint> cloud(std::size_t n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FeaturePoint> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng)};
  return pts;
}

void BM_KMeansFit(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_fit(pts, 4, 1));
}
BENCHMARK(BM_KMeansFit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_KMeansPath(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_path(pts, kMaxClusters, 1));
}
BENCHMARK(BM_KMeansPath)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
