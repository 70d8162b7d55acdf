// SPDX-License-Identifier: Apache-2.0
#include "homeseq/timefeatures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace homeseq {

TimeBucketScheme::TimeBucketScheme(std::vector<std::int64_t> upper_edges,
                                   std::vector<std::string> names)
    : edges_(std::move(upper_edges)), names_(std::move(names)) {
  if (names_.size() != edges_.size() + 1)
    throw ConfigError("bucket scheme needs one more name than upper edges");
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (edges_[i] <= 0 || (i > 0 && edges_[i] <= edges_[i - 1]))
      throw ConfigError("bucket edges must be positive and strictly increasing");
}

TimeBucketScheme TimeBucketScheme::four_class() {
  return TimeBucketScheme({60, 15 * 60, 3600}, {"<1min", "1-15min", "15min-1h", ">1h"});
}

TimeBucketScheme TimeBucketScheme::eight_class() {
  return TimeBucketScheme({60, 5 * 60, 15 * 60, 30 * 60, 3600, 2 * 3600, 5 * 3600},
                          {"<1min", "1-5min", "5-15min", "15-30min", "30min-1h", "1-2h", "2-5h",
                           ">5h"});
}

std::size_t bucketize(std::int64_t elapsed_seconds, const TimeBucketScheme& scheme) {
  if (elapsed_seconds < 0)
    throw ValidationError("negative elapsed time " + std::to_string(elapsed_seconds));
  const auto& edges = scheme.upper_edges();
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), elapsed_seconds) -
                                  edges.begin());
}

// ---------------------------------------------------------------------------

namespace {

bool in_ranges(std::size_t p, std::span<const std::pair<std::size_t, std::size_t>> ranges) {
  if (ranges.empty()) return true;
  for (const auto& [b, e] : ranges)
    if (p >= b && p + 1 < e) return true;  // the gap to p+1 must stay inside the range
  return false;
}

SensorTimeClusters fit_sensor(const std::string& token, const std::vector<double>& hours,
                              const std::vector<std::int64_t>& elapsed, std::uint64_t seed,
                              std::size_t forced_k) {
  SensorTimeClusters s;
  s.token = token;
  s.samples = hours.size();
  std::int64_t max_dt = 0;
  for (auto dt : elapsed) max_dt = std::max(max_dt, dt);
  s.log_elapsed_max = max_dt > 0 ? std::log1p(static_cast<double>(max_dt)) : 1.0;
  if (hours.empty()) {
    s.k = 1;
    s.centroids = {FeaturePoint{0.0, 0.0}};
    return s;
  }
  std::vector<FeaturePoint> points(hours.size());
  for (std::size_t i = 0; i < hours.size(); ++i)
    points[i] = {hours[i] / 24.0, std::log1p(static_cast<double>(elapsed[i])) / s.log_elapsed_max};

  if (forced_k > 0) {
    const std::size_t k = std::min(forced_k, points.size());
    auto fit = kmeans_fit(points, k, seed);
    s.k = k;
    s.centroids = fit.centroids;
    s.ssd_curve = {fit.ssd};
    return s;
  }
  const auto path = kmeans_path(points, kMaxClusters, seed);
  for (const auto& r : path) s.ssd_curve.push_back(r.ssd);
  if (path.size() < 3 || s.ssd_curve.front() <= 0.0)
    s.k = 1;
  else
    s.k = std::min(elbow_select(s.ssd_curve), path.size());
  s.centroids = path[s.k - 1].centroids;
  return s;
}

void fit_sensors(const SymbolSequence& sequence, std::uint64_t seed,
                 std::span<const std::pair<std::size_t, std::size_t>> ranges,
                 std::size_t forced_k, std::vector<SensorTimeClusters>& out) {
  const Vocabulary base_vocab(sequence.vocabulary.base_tokens());
  const std::size_t n_base = base_vocab.size();
  std::vector<std::vector<double>> hours(n_base);
  std::vector<std::vector<std::int64_t>> elapsed(n_base);
  for (std::size_t p = 0; p < sequence.size(); ++p) {
    const auto& m = sequence.meta[p];
    if (!m.to_next || !in_ranges(p, ranges)) continue;
    hours[sequence.base_tokens[p]].push_back(m.timestamp.hour_of_day());
    elapsed[sequence.base_tokens[p]].push_back(*m.to_next);
  }
  out.clear();
  for (std::size_t b = 0; b < n_base; ++b)
    out.push_back(fit_sensor(base_vocab.tokens()[b], hours[b], elapsed[b], seed + b, forced_k));
}

}  // namespace

TimeClusterModel TimeClusterModel::fit(const SymbolSequence& sequence, std::uint64_t seed,
                                       std::span<const std::pair<std::size_t, std::size_t>> ranges) {
  TimeClusterModel model;
  model.base_ = Vocabulary(sequence.vocabulary.base_tokens());
  fit_sensors(sequence, seed, ranges, 0, model.sensors_);
  return model;
}

void TimeClusterModel::force_k(const SymbolSequence& sequence, std::size_t k, std::uint64_t seed) {
  base_ = Vocabulary(sequence.vocabulary.base_tokens());
  fit_sensors(sequence, seed, {}, k, sensors_);
}

std::size_t TimeClusterModel::max_k() const {
  std::size_t k = 1;
  for (const auto& s : sensors_) k = std::max(k, s.k);
  return k;
}

FeaturePoint TimeClusterModel::normalize(TokenId base_token, double hour,
                                         std::int64_t elapsed) const {
  const auto& s = sensors_.at(base_token);
  return {hour / 24.0, std::log1p(static_cast<double>(std::max<std::int64_t>(elapsed, 0))) /
                           s.log_elapsed_max};
}

std::size_t TimeClusterModel::assign(TokenId base_token, double hour, std::int64_t elapsed) const {
  const auto p = normalize(base_token, hour, elapsed);
  const auto& cs = sensors_.at(base_token).centroids;
  std::size_t best = 0;
  double best_d = 0.0;
  for (std::size_t c = 0; c < cs.size(); ++c) {
    const double d = (p[0] - cs[c][0]) * (p[0] - cs[c][0]) + (p[1] - cs[c][1]) * (p[1] - cs[c][1]);
    if (c == 0 || d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::string TimeClusterModel::to_text() const {
  nlohmann::ordered_json doc;
  doc["format"] = "homeseq-time-clusters/1";
  doc["features"] = "hour/24, log(1+elapsed_to_next)/log_elapsed_max";
  doc["tokens"] = base_.tokens();
  auto& arr = doc["sensors"] = nlohmann::ordered_json::array();
  for (const auto& s : sensors_) {
    nlohmann::ordered_json j;
    j["token"] = s.token;
    j["k"] = s.k;
    j["samples"] = s.samples;
    j["log_elapsed_max"] = s.log_elapsed_max;
    auto& cs = j["centroids"] = nlohmann::ordered_json::array();
    for (const auto& c : s.centroids) cs.push_back({c[0], c[1]});
    j["ssd_curve"] = s.ssd_curve;
    arr.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

TimeClusterModel TimeClusterModel::from_text(std::string_view text) {
  TimeClusterModel model;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format") != "homeseq-time-clusters/1")
      throw ConfigError("unsupported time-cluster model format");
    model.base_ = Vocabulary(doc.at("tokens").get<std::vector<std::string>>());
    for (const auto& j : doc.at("sensors")) {
      SensorTimeClusters s;
      s.token = j.at("token").get<std::string>();
      s.k = j.at("k").get<std::size_t>();
      s.samples = j.at("samples").get<std::size_t>();
      s.log_elapsed_max = j.at("log_elapsed_max").get<double>();
      for (const auto& c : j.at("centroids")) s.centroids.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
      s.ssd_curve = j.at("ssd_curve").get<std::vector<double>>();
      if (s.k < 1 || s.k > kMaxClusters || s.centroids.size() != s.k)
        throw ConfigError("time-cluster model: bad K for token " + s.token);
      model.sensors_.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("time-cluster model: ") + e.what());
  }
  if (model.sensors_.size() != model.base_.size())
    throw ConfigError("time-cluster model: sensor count does not match tokens");
  return model;
}

std::string TimeClusterModel::ssd_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "token,k,ssd,chosen\n";
  for (const auto& s : sensors_)
    for (std::size_t k = 0; k < s.ssd_curve.size(); ++k)
      os << s.token << "," << (k + 1) << "," << s.ssd_curve[k] << "," << (k + 1 == s.k ? 1 : 0)
         << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

std::string_view to_string(TimeMode mode) {
  switch (mode) {
    case TimeMode::none: return "none";
    case TimeMode::bucket4: return "bucket4";
    case TimeMode::bucket8: return "bucket8";
    case TimeMode::kcluster: return "kcluster";
  }
  return "?";
}

TimeMode time_mode_from_string(std::string_view text) {
  if (text == "none") return TimeMode::none;
  if (text == "bucket4") return TimeMode::bucket4;
  if (text == "bucket8") return TimeMode::bucket8;
  if (text == "kcluster") return TimeMode::kcluster;
  throw ConfigError("unknown time mode '" + std::string(text) + "'");
}

SymbolSequence annotate(const SymbolSequence& sequence, TimeMode mode,
                        const TimeClusterModel* model, TimeReference reference) {
  if (sequence.vocabulary.is_composite()) throw ConfigError("sequence is already annotated");
  if (mode == TimeMode::none) return sequence;
  if (mode == TimeMode::kcluster && !model)
    throw ConfigError("kcluster annotation requires a fitted time-cluster model");
  if (model && mode == TimeMode::kcluster &&
      model->base_vocabulary().tokens() != sequence.vocabulary.tokens())
    throw ConfigError("time-cluster model was fitted on a different vocabulary");

  std::vector<std::string> time_names;
  std::optional<TimeBucketScheme> scheme;
  if (mode == TimeMode::kcluster) {
    for (std::size_t k = 0; k < model->max_k(); ++k) time_names.push_back("k" + std::to_string(k));
  } else {
    scheme = mode == TimeMode::bucket4 ? TimeBucketScheme::four_class()
                                       : TimeBucketScheme::eight_class();
    time_names = scheme->names();
  }

  SymbolSequence out;
  out.vocabulary = Vocabulary::composite(sequence.vocabulary, time_names);
  out.base_tokens = sequence.base_tokens;
  out.meta = sequence.meta;
  out.tokens.resize(sequence.size());

  for (std::size_t p = 0; p < sequence.size(); ++p) {
    // Event that opens the described gap.
    const bool causal = reference == TimeReference::since_previous;
    if (causal && p == 0) {
      out.tokens[p] = out.vocabulary.start_index();
      continue;
    }
    const std::size_t opener = causal ? p - 1 : p;
    const auto& gap = sequence.meta[opener].to_next;
    if (!gap) {
      out.tokens[p] = out.vocabulary.start_index();
      continue;
    }
    std::size_t time;
    if (scheme) {
      time = bucketize(*gap, *scheme);
    } else {
      time = model->assign(sequence.base_tokens[opener], sequence.meta[opener].timestamp.hour_of_day(),
                           *gap);
    }
    out.tokens[p] = out.vocabulary.compose(sequence.base_tokens[p], time);
  }
  return out;
}

}  // namespace homeseq
