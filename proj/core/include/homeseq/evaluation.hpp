// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "homeseq/lstm.hpp"
#include "homeseq/ppm.hpp"
#include "homeseq/symbolization.hpp"
#include "homeseq/timefeatures.hpp"

namespace homeseq {

/// Half-open token range [first, second).
using Range = std::pair<std::size_t, std::size_t>;

struct FoldSplit {
  std::size_t index = 0;
  std::vector<Range> train;  // merged contiguous ranges, in order
  Range validation;
  Range test;
};

inline constexpr std::size_t kBlocks = 5;

/// Five contiguous 20% blocks; fold i tests on block i, validates on block
/// i+1 (mod 5) and trains on the rest. k < 5 keeps the first k rotations.
std::vector<FoldSplit> chronological_folds(std::size_t sequence_length, std::size_t k = 5);

enum class Method { alz_ppm, speed_ppm, lstm_alz, lstm_speed };

std::string_view to_string(Method method);
Method method_from_string(std::string_view text);
bool is_recurrent(Method method);
PpmFrontend frontend_of(Method method);

struct EvalConfig {
  Method method = Method::speed_ppm;
  std::size_t folds = 5;
  /// Time augmentation of recurrent inputs (PPM methods require `none`).
  TimeMode time_mode = TimeMode::none;
  TimeReference time_reference = TimeReference::since_previous;
  /// Predict composite (sensor, time) tokens instead of sensor tokens.
  bool joint = false;
  LstmConfig lstm;
  std::size_t ppm_max_order = 0;
  AlzOptions alz;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  void validate() const;
};

struct FoldResult {
  std::size_t index = 0;
  std::size_t train_tokens = 0;
  std::size_t test_samples = 0;
  double accuracy = 0.0;
  double baseline_accuracy = 0.0;  // majority training token
  /// Joint mode: per-component accuracies of the composite prediction.
  std::optional<double> sensor_accuracy;
  std::optional<double> time_accuracy;
  std::size_t epochs = 0;  // recurrent methods only
  std::size_t best_epoch = 0;
  double seconds = 0.0;
};

struct EvalReport {
  Method method = Method::speed_ppm;
  TimeMode time_mode = TimeMode::none;
  bool joint = false;
  std::vector<std::string> labels;  // output vocabulary
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double mean_baseline = 0.0;
  std::optional<double> mean_sensor_accuracy;
  std::optional<double> mean_time_accuracy;
  /// confusion[actual][predicted], summed over folds.
  std::vector<std::vector<std::uint64_t>> confusion;

  std::string to_text() const;
  std::string folds_csv() const;
  std::string confusion_csv() const;
  /// Wall-clock seconds per fold; kept apart so other outputs are reproducible.
  std::string timing_csv() const;
};

/// Evaluates on an already encoded plain sequence. The PPM frontend and the
/// time model (kcluster mode, fitted on every fold's training ranges) are
/// chosen from `config`.
EvalReport evaluate(const SymbolSequence& sequence, const EvalConfig& config);

/// Encodes `events` with the method's frontend first.
EvalReport evaluate(std::span<const SensorEvent> events, const SensorRegistry& registry,
                    const EvalConfig& config);

SymbolSequence encode_for(Method method, std::span<const SensorEvent> events,
                          const SensorRegistry& registry, const AlzOptions& alz = {});

struct SweepPoint {
  std::size_t size = 0;
  double accuracy = 0.0;
  double baseline_accuracy = 0.0;
  double seconds = 0.0;
};

/// evaluate() on every prefix of the grid; the grid must be ascending and fit
/// the sequence.
std::vector<SweepPoint> size_sweep(const SymbolSequence& sequence, std::span<const std::size_t> grid,
                                   const EvalConfig& config);
std::string sweep_csv(std::span<const SweepPoint> curve, Method method);
std::string sweep_timing_csv(std::span<const SweepPoint> curve, Method method);

/// Windows of every range, padded at each range start, never crossing ranges.
WindowDataset windows_over(std::span<const TokenId> inputs, std::span<const TokenId> targets,
                           std::span<const Range> ranges, std::size_t window, TokenId start,
                           TokenId skip_target);

/// Runs `job(i)` for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& job);

}  // namespace homeseq
