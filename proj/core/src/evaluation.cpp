// SPDX-License-Identifier: Apache-2.0
#include "homeseq/evaluation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "homeseq/error.hpp"

namespace homeseq {

namespace {

constexpr TokenId kNoSkip = std::numeric_limits<TokenId>::max();

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<Range> merge_ranges(std::vector<Range> ranges) {
  std::sort(ranges.begin(), ranges.end());
  std::vector<Range> out;
  for (const auto& r : ranges) {
    if (r.first == r.second) continue;
    if (!out.empty() && out.back().second == r.first)
      out.back().second = r.second;
    else
      out.push_back(r);
  }
  return out;
}

TokenId majority(std::span<const TokenId> targets, std::span<const Range> ranges,
                 std::size_t width, TokenId skip) {
  std::vector<std::uint64_t> counts(width, 0);
  for (const auto& [a, b] : ranges)
    for (std::size_t p = a; p < b; ++p)
      if (targets[p] != skip) ++counts[targets[p]];
  return static_cast<TokenId>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  return seed * 1000003ULL + fold;
}

}  // namespace

std::vector<FoldSplit> chronological_folds(std::size_t n, std::size_t k) {
  if (k == 0 || k > kBlocks) throw ConfigError("fold count must be between 1 and 5");
  if (n < kBlocks * k)
    throw ValidationError("sequence of " + std::to_string(n) + " tokens is too short for " +
                          std::to_string(k) + " folds (need " + std::to_string(kBlocks * k) + ")");
  std::array<Range, kBlocks> blocks;
  for (std::size_t b = 0; b < kBlocks; ++b) blocks[b] = {b * n / kBlocks, (b + 1) * n / kBlocks};
  std::vector<FoldSplit> folds;
  for (std::size_t i = 0; i < k; ++i) {
    FoldSplit f;
    f.index = i;
    f.test = blocks[i];
    f.validation = blocks[(i + 1) % kBlocks];
    std::vector<Range> train;
    for (std::size_t b = 0; b < kBlocks; ++b)
      if (b != i && b != (i + 1) % kBlocks) train.push_back(blocks[b]);
    f.train = merge_ranges(std::move(train));
    folds.push_back(std::move(f));
  }
  return folds;
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::alz_ppm: return "alz-ppm";
    case Method::speed_ppm: return "speed-ppm";
    case Method::lstm_alz: return "lstm-alz";
    case Method::lstm_speed: return "lstm-speed";
  }
  return "?";
}

Method method_from_string(std::string_view text) {
  for (Method m : {Method::alz_ppm, Method::speed_ppm, Method::lstm_alz, Method::lstm_speed})
    if (to_string(m) == text) return m;
  throw ConfigError("unknown method '" + std::string(text) +
                    "' (expected alz-ppm, speed-ppm, lstm-alz or lstm-speed)");
}

bool is_recurrent(Method method) {
  return method == Method::lstm_alz || method == Method::lstm_speed;
}

PpmFrontend frontend_of(Method method) {
  return method == Method::alz_ppm || method == Method::lstm_alz ? PpmFrontend::alz
                                                                 : PpmFrontend::speed;
}

void EvalConfig::validate() const {
  if (folds == 0 || folds > kBlocks) throw ConfigError("fold count must be between 1 and 5");
  if (!is_recurrent(method) && time_mode != TimeMode::none)
    throw ConfigError("time modes apply to recurrent methods only");
  if (!is_recurrent(method) && joint) throw ConfigError("joint prediction needs a recurrent method");
  if (joint && time_mode == TimeMode::none) throw ConfigError("joint prediction needs a time mode");
  if (is_recurrent(method)) lstm.validate();
}

SymbolSequence encode_for(Method method, std::span<const SensorEvent> events,
                          const SensorRegistry& registry, const AlzOptions& alz) {
  return frontend_of(method) == PpmFrontend::alz ? alz_encode(events, registry, alz)
                                                 : speed_encode(events, registry);
}

WindowDataset windows_over(std::span<const TokenId> inputs, std::span<const TokenId> targets,
                           std::span<const Range> ranges, std::size_t window, TokenId start,
                           TokenId skip_target) {
  WindowDataset out;
  out.window = window;
  for (const auto& [a, b] : ranges) {
    if (b > inputs.size() || a > b) throw ConfigError("range outside the sequence");
    out.append(make_windows(inputs.subspan(a, b - a), targets.subspan(a, b - a), window, start,
                            skip_target));
  }
  return out;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& job) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

struct FoldOutput {
  FoldResult result;
  std::vector<std::vector<std::uint64_t>> confusion;
};

FoldOutput run_ppm_fold(const SymbolSequence& seq, const FoldSplit& fold, const EvalConfig& cfg) {
  std::vector<Range> fit_ranges = fold.train;
  fit_ranges.push_back(fold.validation);
  fit_ranges = merge_ranges(std::move(fit_ranges));
  std::vector<std::vector<TokenId>> segments;
  for (const auto& [a, b] : fit_ranges)
    segments.emplace_back(seq.tokens.begin() + static_cast<std::ptrdiff_t>(a),
                          seq.tokens.begin() + static_cast<std::ptrdiff_t>(b));

  const std::size_t width = seq.vocabulary.size();
  PpmModel model({frontend_of(cfg.method), cfg.ppm_max_order}, width);
  model.fit(segments);

  FoldOutput out;
  out.confusion.assign(width, std::vector<std::uint64_t>(width, 0));
  const TokenId base = majority(seq.tokens, fit_ranges, width, kNoSkip);
  const std::size_t depth = model.trie().max_depth();
  std::size_t hits = 0, base_hits = 0, n = 0;
  for (std::size_t p = fold.test.first; p < fold.test.second; ++p) {
    const std::size_t from = p - std::min(p - fold.test.first, depth);
    const auto context = std::span<const TokenId>(seq.tokens).subspan(from, p - from);
    const TokenId guess = model.predict(context);
    const TokenId actual = seq.tokens[p];
    ++out.confusion[actual][guess];
    hits += guess == actual;
    base_hits += base == actual;
    ++n;
  }
  auto& r = out.result;
  for (const auto& [a, b] : fit_ranges) r.train_tokens += b - a;
  r.test_samples = n;
  r.accuracy = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  r.baseline_accuracy = n ? static_cast<double>(base_hits) / static_cast<double>(n) : 0.0;
  return out;
}

FoldOutput run_lstm_fold(const SymbolSequence& seq, const FoldSplit& fold, const EvalConfig& cfg) {
  SymbolSequence annotated;
  const SymbolSequence* input_seq = &seq;
  if (cfg.time_mode != TimeMode::none) {
    TimeClusterModel tm;
    if (cfg.time_mode == TimeMode::kcluster) tm = TimeClusterModel::fit(seq, cfg.seed, fold.train);
    annotated = annotate(seq, cfg.time_mode, &tm, cfg.time_reference);
    input_seq = &annotated;
  }
  const Vocabulary& in_vocab = input_seq->vocabulary;
  const std::span<const TokenId> inputs = input_seq->tokens;
  const std::span<const TokenId> targets = cfg.joint ? input_seq->tokens : seq.base_tokens;
  const std::size_t out_width = cfg.joint ? in_vocab.size() : seq.vocabulary.base_size();
  const TokenId skip = cfg.joint ? in_vocab.start_index() : kNoSkip;
  const TokenId start = in_vocab.start_index();
  const std::size_t L = cfg.lstm.memory_length;

  const auto train_set = windows_over(inputs, targets, fold.train, L, start, skip);
  const auto val_set = windows_over(inputs, targets, std::span(&fold.validation, 1), L, start, skip);
  const auto test_set = windows_over(inputs, targets, std::span(&fold.test, 1), L, start, skip);

  LstmConfig lc = cfg.lstm;
  lc.seed = fold_seed(cfg.lstm.seed, fold.index);
  RecurrentModel model(in_vocab.input_width(), out_width, lc.hidden, lc.seed);
  const TrainResult trained = train(std::move(model), train_set, val_set, lc);
  const auto pred = predict_all(trained.model, test_set);

  // Joint kcluster arity varies per fold; the report always uses kMaxClusters
  // time slots per sensor so folds sum cell by cell.
  const bool widen = cfg.joint && cfg.time_mode == TimeMode::kcluster;
  const std::size_t report_width = widen ? in_vocab.base_size() * kMaxClusters : out_width;
  auto cell = [&](TokenId t) -> std::size_t {
    if (!widen) return t;
    const auto [b, k] = in_vocab.decompose(t);
    return static_cast<std::size_t>(b) * kMaxClusters + k;
  };

  FoldOutput out;
  out.confusion.assign(report_width, std::vector<std::uint64_t>(report_width, 0));
  const TokenId base = majority(targets, fold.train, out_width, skip);
  std::size_t hits = 0, base_hits = 0, sensor_hits = 0, time_hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const TokenId actual = test_set.targets[i];
    ++out.confusion[cell(actual)][cell(pred[i])];
    hits += pred[i] == actual;
    base_hits += base == actual;
    if (cfg.joint) {
      const auto [ps, pt] = in_vocab.decompose(pred[i]);
      const auto [as, at] = in_vocab.decompose(actual);
      sensor_hits += ps == as;
      time_hits += pt == at;
    }
  }
  auto& r = out.result;
  const auto n = static_cast<double>(pred.size());
  for (const auto& [a, b] : fold.train) r.train_tokens += b - a;
  r.test_samples = pred.size();
  r.accuracy = pred.empty() ? 0.0 : static_cast<double>(hits) / n;
  r.baseline_accuracy = pred.empty() ? 0.0 : static_cast<double>(base_hits) / n;
  if (cfg.joint) {
    r.sensor_accuracy = pred.empty() ? 0.0 : static_cast<double>(sensor_hits) / n;
    r.time_accuracy = pred.empty() ? 0.0 : static_cast<double>(time_hits) / n;
  }
  r.epochs = trained.history.size();
  r.best_epoch = trained.best_epoch;
  return out;
}

std::vector<std::string> output_labels(const SymbolSequence& seq, const EvalConfig& cfg) {
  if (!cfg.joint) return seq.vocabulary.base_tokens();
  std::vector<std::string> names;
  if (cfg.time_mode == TimeMode::bucket4) names = TimeBucketScheme::four_class().names();
  else if (cfg.time_mode == TimeMode::bucket8) names = TimeBucketScheme::eight_class().names();
  else
    for (std::size_t k = 0; k < kMaxClusters; ++k) names.push_back("k" + std::to_string(k));
  return Vocabulary::composite(Vocabulary(seq.vocabulary.base_tokens()), names).tokens();
}

}  // namespace

EvalReport evaluate(const SymbolSequence& sequence, const EvalConfig& config) {
  config.validate();
  if (sequence.vocabulary.is_composite())
    throw ConfigError("evaluate expects a plain sequence; time modes are applied per fold");
  if (sequence.vocabulary.size() == 0) throw ConfigError("empty vocabulary");
  for (TokenId t : sequence.tokens)
    if (t >= sequence.vocabulary.size()) throw ValidationError("sequence contains a START token");

  const auto folds = chronological_folds(sequence.size(), config.folds);
  std::vector<FoldOutput> outputs(folds.size());
  parallel_for(folds.size(), config.jobs, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    outputs[i] = is_recurrent(config.method) ? run_lstm_fold(sequence, folds[i], config)
                                             : run_ppm_fold(sequence, folds[i], config);
    outputs[i].result.index = i;
    outputs[i].result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  EvalReport report;
  report.method = config.method;
  report.time_mode = config.time_mode;
  report.joint = config.joint;
  std::size_t width = 0;
  for (const auto& o : outputs) width = std::max(width, o.confusion.size());
  report.confusion.assign(width, std::vector<std::uint64_t>(width, 0));
  double sensor = 0.0, time = 0.0;
  for (const auto& o : outputs) {
    report.folds.push_back(o.result);
    report.mean_accuracy += o.result.accuracy;
    report.mean_baseline += o.result.baseline_accuracy;
    sensor += o.result.sensor_accuracy.value_or(0.0);
    time += o.result.time_accuracy.value_or(0.0);
    for (std::size_t a = 0; a < o.confusion.size(); ++a)
      for (std::size_t b = 0; b < o.confusion[a].size(); ++b) report.confusion[a][b] += o.confusion[a][b];
  }
  const auto k = static_cast<double>(outputs.size());
  report.mean_accuracy /= k;
  report.mean_baseline /= k;
  if (config.joint) {
    report.mean_sensor_accuracy = sensor / k;
    report.mean_time_accuracy = time / k;
  }
  report.labels = output_labels(sequence, config);
  return report;
}

EvalReport evaluate(std::span<const SensorEvent> events, const SensorRegistry& registry,
                    const EvalConfig& config) {
  return evaluate(encode_for(config.method, events, registry, config.alz), config);
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "method: " << to_string(method) << "\n";
  os << "time mode: " << to_string(time_mode) << (joint ? " (joint)" : "") << "\n";
  os << "folds: " << folds.size() << "\n";
  for (const auto& f : folds) {
    os << "  fold " << f.index << ": accuracy " << fixed(f.accuracy) << ", baseline "
       << fixed(f.baseline_accuracy) << ", test " << f.test_samples << ", train " << f.train_tokens;
    if (f.epochs) os << ", epochs " << f.epochs << " (best " << f.best_epoch << ")";
    os << "\n";
  }
  os << "mean accuracy: " << fixed(mean_accuracy) << "\n";
  os << "majority baseline: " << fixed(mean_baseline) << "\n";
  if (mean_sensor_accuracy) os << "sensor component accuracy: " << fixed(*mean_sensor_accuracy) << "\n";
  if (mean_time_accuracy) os << "time component accuracy: " << fixed(*mean_time_accuracy) << "\n";
  return os.str();
}

std::string EvalReport::folds_csv() const {
  std::ostringstream os;
  os << "fold,accuracy,baseline,test_samples,train_tokens,epochs,best_epoch";
  if (joint) os << ",sensor_accuracy,time_accuracy";
  os << "\n";
  for (const auto& f : folds) {
    os << f.index << ',' << fixed(f.accuracy) << ',' << fixed(f.baseline_accuracy) << ','
       << f.test_samples << ',' << f.train_tokens << ',' << f.epochs << ',' << f.best_epoch;
    if (joint) os << ',' << fixed(f.sensor_accuracy.value_or(0)) << ',' << fixed(f.time_accuracy.value_or(0));
    os << "\n";
  }
  return os.str();
}

std::string EvalReport::confusion_csv() const {
  std::ostringstream os;
  os << "actual\\predicted";
  for (const auto& l : labels) os << ',' << l;
  os << "\n";
  for (std::size_t a = 0; a < confusion.size(); ++a) {
    os << labels[a];
    for (auto c : confusion[a]) os << ',' << c;
    os << "\n";
  }
  return os.str();
}

std::string EvalReport::timing_csv() const {
  std::ostringstream os;
  os << "method,fold,seconds\n";
  for (const auto& f : folds) os << to_string(method) << ',' << f.index << ',' << fixed(f.seconds, 3) << "\n";
  return os.str();
}

std::vector<SweepPoint> size_sweep(const SymbolSequence& sequence, std::span<const std::size_t> grid,
                                   const EvalConfig& config) {
  if (grid.empty()) throw ConfigError("empty size grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && grid[i] <= grid[i - 1]) throw ConfigError("size grid must be strictly ascending");
    if (grid[i] > sequence.size())
      throw ConfigError("grid size " + std::to_string(grid[i]) + " exceeds the sequence length " +
                        std::to_string(sequence.size()));
  }
  std::vector<SweepPoint> curve(grid.size());
  EvalConfig inner = config;
  inner.jobs = 1;
  parallel_for(grid.size(), config.jobs, [&](std::size_t i) {
    SymbolSequence prefix;
    prefix.vocabulary = sequence.vocabulary;
    const auto n = static_cast<std::ptrdiff_t>(grid[i]);
    prefix.tokens.assign(sequence.tokens.begin(), sequence.tokens.begin() + n);
    prefix.base_tokens.assign(sequence.base_tokens.begin(), sequence.base_tokens.begin() + n);
    prefix.meta.assign(sequence.meta.begin(), sequence.meta.begin() + n);
    if (!prefix.meta.empty()) prefix.meta.back().to_next.reset();
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = evaluate(prefix, inner);
    curve[i] = {grid[i], report.mean_accuracy, report.mean_baseline,
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
  });
  return curve;
}

std::string sweep_csv(std::span<const SweepPoint> curve, Method method) {
  std::ostringstream os;
  os << "method,size,accuracy,baseline\n";
  for (const auto& p : curve)
    os << to_string(method) << ',' << p.size << ',' << fixed(p.accuracy) << ',' << fixed(p.baseline_accuracy) << "\n";
  return os.str();
}

std::string sweep_timing_csv(std::span<const SweepPoint> curve, Method method) {
  std::ostringstream os;
  os << "method,size,seconds\n";
  for (const auto& p : curve) os << to_string(method) << ',' << p.size << ',' << fixed(p.seconds, 3) << "\n";
  return os.str();
}

}  // namespace homeseq
