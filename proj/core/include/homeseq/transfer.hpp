// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "homeseq/evaluation.hpp"
#include "homeseq/events.hpp"
#include "homeseq/lstm.hpp"
#include "homeseq/timefeatures.hpp"

namespace homeseq {

/// Per-apartment relabelling onto labels shared across apartments.
///
///   [labels]
///   7 = hotdrink
///   [drop]
///   14, 15
struct HarmonizationMap {
  std::map<SensorId, std::string> labels;
  std::set<SensorId> drop;

  std::string to_text() const;
  static HarmonizationMap from_text(std::string_view text);
};

/// Sorted union of shared labels. Label i becomes pseudo-sensor id i + 1.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::span<const HarmonizationMap> maps);

  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<SensorId> id_of(std::string_view label) const;
  /// Registry over the pseudo-sensors, letters in label order.
  const SensorRegistry& registry() const { return registry_; }
  /// Map that sends every pseudo-sensor to its own label.
  HarmonizationMap identity() const;

 private:
  std::vector<std::string> labels_;
  SensorRegistry registry_;
};

/// Rewrites ids to the label space and removes dropped sensors, keeping order.
std::vector<SensorEvent> harmonize(std::span<const SensorEvent> events, const HarmonizationMap& map,
                                   const LabelSpace& space);

struct TransferConfig {
  LstmConfig lstm;
  TimeMode time_mode = TimeMode::kcluster;
  /// Predict composite (sensor, time) tokens.
  bool joint = true;
  std::size_t test_events = 3000;
  std::size_t repetitions = 3;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  void validate() const;
};

/// Network trained on the sources together with the input encoding it expects.
struct PretrainedModel {
  Checkpoint checkpoint;
  TimeMode time_mode = TimeMode::none;
  bool joint = false;
  TimeClusterModel time_model;  // kcluster mode
  std::vector<EpochRecord> history;
};

/// Trains on every source's first 80%, validating on the last 20% of each.
/// Sources are plain SPEED sequences over the same label space.
PretrainedModel pretrain(std::span<const SymbolSequence> sources, const TransferConfig& config,
                         std::uint64_t seed);

/// Time model and encoding of a from-scratch run that matches `like`.
PretrainedModel untrained_like(const PretrainedModel& like, std::uint64_t seed);

struct FinetuneOutcome {
  double best_accuracy = 0.0;  // best test accuracy over the fine-tuning epochs
  std::size_t best_epoch = 0;  // epoch of best_accuracy (0 = before any update)
  std::size_t epochs = 0;
};

/// Fine-tunes a copy of `start` on target events [0, n) (last 20% validating)
/// and tests on [n, n + test_events) after every epoch.
FinetuneOutcome finetune(const PretrainedModel& start, const SymbolSequence& target,
                         std::size_t n, const TransferConfig& config, std::uint64_t seed);

struct TransferRow {
  std::size_t budget = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  FinetuneOutcome pretrained;
  FinetuneOutcome scratch;
};

struct TransferReport {
  std::vector<TransferRow> rows;

  double mean_pretrained(std::size_t budget) const;
  double mean_scratch(std::size_t budget) const;
  std::string to_csv() const;
  std::string to_text() const;
};

/// Full protocol: per repetition, pretrain once and compare fine-tuning
/// against training from scratch for every budget.
TransferReport pretrain_finetune(std::span<const SymbolSequence> sources,
                                 const SymbolSequence& target, std::span<const std::size_t> budgets,
                                 const TransferConfig& config);

}  // namespace homeseq
