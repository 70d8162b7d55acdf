// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "homeseq/symbolization.hpp"

namespace homeseq {

struct LstmConfig {
  std::size_t memory_length = 10;
  std::size_t hidden = 64;
  double learning_rate = 0.01;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 200;
  /// Epochs without validation-loss improvement before stopping.
  std::size_t patience = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  /// Train in 32-bit floats (parameters are still stored as double).
  bool single_precision = false;

  void validate() const;
};

/// Gate rows are stacked [input; forget; candidate; output], each `hidden` tall.
template <typename T>
struct BasicLstmParameters {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  Matrix w_input;      // 4H x I (one-hot input, so columns are looked up)
  Matrix w_recurrent;  // 4H x H
  Vector bias;         // 4H
  Matrix w_output;     // O x H
  Vector b_output;     // O

  static BasicLstmParameters zeros(std::size_t input_width, std::size_t output_width,
                                   std::size_t hidden) {
    const auto i = static_cast<Eigen::Index>(input_width);
    const auto o = static_cast<Eigen::Index>(output_width);
    const auto h = static_cast<Eigen::Index>(hidden);
    return {Matrix::Zero(4 * h, i), Matrix::Zero(4 * h, h), Vector::Zero(4 * h),
            Matrix::Zero(o, h), Vector::Zero(o)};
  }

  template <typename U>
  BasicLstmParameters<U> cast() const {
    return {w_input.template cast<U>(), w_recurrent.template cast<U>(), bias.template cast<U>(),
            w_output.template cast<U>(), b_output.template cast<U>()};
  }

  /// Visits every tensor as a flat span, in a fixed order.
  template <typename F>
  void for_each_tensor(F&& f) {
    f(std::span<T>(w_input.data(), static_cast<std::size_t>(w_input.size())));
    f(std::span<T>(w_recurrent.data(), static_cast<std::size_t>(w_recurrent.size())));
    f(std::span<T>(bias.data(), static_cast<std::size_t>(bias.size())));
    f(std::span<T>(w_output.data(), static_cast<std::size_t>(w_output.size())));
    f(std::span<T>(b_output.data(), static_cast<std::size_t>(b_output.size())));
  }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(w_input.size() + w_recurrent.size() + bias.size() +
                                    w_output.size() + b_output.size());
  }
};

using LstmParameters = BasicLstmParameters<double>;

/// One-hidden-layer LSTM reading a window of one-hot tokens and emitting a
/// softmax over the output vocabulary after the last step.
class RecurrentModel {
 public:
  RecurrentModel() = default;
  /// Scaled-uniform (Glorot) weights, zero biases except forget gate = 1.
  RecurrentModel(std::size_t input_width, std::size_t output_width, std::size_t hidden,
                 std::uint64_t seed);
  static RecurrentModel zeros(std::size_t input_width, std::size_t output_width,
                              std::size_t hidden);

  std::size_t input_width() const { return static_cast<std::size_t>(params.w_input.cols()); }
  std::size_t output_width() const { return static_cast<std::size_t>(params.w_output.rows()); }
  std::size_t hidden() const { return static_cast<std::size_t>(params.w_recurrent.cols()); }
  bool all_finite() const;

  LstmParameters params;
};

/// Fixed-length windows of input ids with the id to predict after each.
struct WindowDataset {
  std::size_t window = 0;
  std::vector<TokenId> inputs;   // size() * window, oldest first
  std::vector<TokenId> targets;  // one per sample

  std::size_t size() const { return targets.size(); }
  std::span<const TokenId> sample(std::size_t i) const {
    return {inputs.data() + i * window, window};
  }
  void append(const WindowDataset& other);
};

/// One sample per position p of the segment: window = inputs[p-L .. p-1]
/// left-padded with `start`, target = targets[p]. Positions whose target is
/// `skip_target` are left out.
WindowDataset make_windows(std::span<const TokenId> inputs, std::span<const TokenId> targets,
                           std::size_t window, TokenId start, TokenId skip_target);

/// Softmax output for one window.
std::vector<double> forward(const RecurrentModel& model, std::span<const TokenId> window);
/// O x B probabilities for the selected samples (all when `indices` is empty).
Eigen::MatrixXd forward_batch(const RecurrentModel& model, const WindowDataset& data,
                              std::span<const std::size_t> indices = {});

/// Mean categorical cross-entropy.
double loss(const RecurrentModel& model, const WindowDataset& data,
            std::span<const std::size_t> indices = {});

struct Gradients {
  LstmParameters grad;
  double loss = 0.0;
};

/// Backpropagation through time of the mean loss over the selected samples.
Gradients backward(const RecurrentModel& model, const WindowDataset& data,
                   std::span<const std::size_t> indices = {});

TokenId predict(const RecurrentModel& model, std::span<const TokenId> window);
std::vector<TokenId> predict_all(const RecurrentModel& model, const WindowDataset& data);
double accuracy(const RecurrentModel& model, const WindowDataset& data);

/// Argmax composite token split into (sensor token, time token).
std::pair<TokenId, std::size_t> predict_joint(const RecurrentModel& model,
                                              const Vocabulary& vocabulary,
                                              std::span<const TokenId> window);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
  std::optional<double> monitor;  // value returned by the epoch callback
};

struct TrainResult {
  RecurrentModel model;  // parameters of the best validation epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<std::optional<double>(const RecurrentModel&, std::size_t)>;

/// Adam with early stopping on validation loss (training loss when the
/// validation set is empty).
TrainResult train(RecurrentModel model, const WindowDataset& train_set,
                  const WindowDataset& validation_set, const LstmConfig& config,
                  const EpochCallback& on_epoch = {});

struct Checkpoint {
  LstmConfig config;
  Vocabulary input_vocabulary;
  Vocabulary output_vocabulary;
  RecurrentModel model;
};

std::string save_checkpoint(const Checkpoint& checkpoint);
Checkpoint load_checkpoint(std::string_view text);

}  // namespace homeseq
