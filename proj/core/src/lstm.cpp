// SPDX-License-Identifier: Apache-2.0
#include "homeseq/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "lstm_engine.hpp"

namespace homeseq {

void LstmConfig::validate() const {
  if (memory_length < 1) throw ConfigError("memory length must be >= 1");
  if (hidden < 1) throw ConfigError("hidden units must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (max_epochs < 1) throw ConfigError("max epochs must be >= 1");
}

RecurrentModel::RecurrentModel(std::size_t input_width, std::size_t output_width,
                               std::size_t hidden, std::uint64_t seed)
    : params(LstmParameters::zeros(input_width, output_width, hidden)) {
  if (input_width == 0 || output_width == 0 || hidden == 0)
    throw ConfigError("LSTM dimensions must be positive");
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](Eigen::MatrixXd& m, double fan_in, double fan_out) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = limit * u(rng);
  };
  const double h = static_cast<double>(hidden);
  glorot(params.w_input, static_cast<double>(input_width), 4.0 * h);
  glorot(params.w_recurrent, h, 4.0 * h);
  glorot(params.w_output, h, static_cast<double>(output_width));
  params.bias.segment(static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(hidden))
      .setOnes();
}

RecurrentModel RecurrentModel::zeros(std::size_t input_width, std::size_t output_width,
                                     std::size_t hidden) {
  RecurrentModel m;
  m.params = LstmParameters::zeros(input_width, output_width, hidden);
  return m;
}

bool RecurrentModel::all_finite() const {
  return params.w_input.allFinite() && params.w_recurrent.allFinite() &&
         params.bias.allFinite() && params.w_output.allFinite() && params.b_output.allFinite();
}

void WindowDataset::append(const WindowDataset& other) {
  if (other.size() == 0) return;
  if (size() == 0) window = other.window;
  if (window != other.window) throw ConfigError("cannot merge datasets with different windows");
  inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
  targets.insert(targets.end(), other.targets.begin(), other.targets.end());
}

WindowDataset make_windows(std::span<const TokenId> inputs, std::span<const TokenId> targets,
                           std::size_t window, TokenId start, TokenId skip_target) {
  if (inputs.size() != targets.size()) throw ConfigError("inputs and targets differ in length");
  if (window == 0) throw ConfigError("window must be >= 1");
  WindowDataset d;
  d.window = window;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    if (targets[p] == skip_target) continue;
    for (std::size_t k = 0; k < window; ++k) {
      // slot k holds position p - window + k
      d.inputs.push_back(p + k >= window ? inputs[p + k - window] : start);
    }
    d.targets.push_back(targets[p]);
  }
  return d;
}

namespace {

std::vector<std::size_t> all_indices(const WindowDataset& data,
                                     std::span<const std::size_t> indices) {
  if (!indices.empty()) return {indices.begin(), indices.end()};
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

void check_inputs(const RecurrentModel& model, const WindowDataset& data) {
  for (TokenId t : data.inputs)
    if (t >= model.input_width())
      throw ConfigError("input token " + std::to_string(t) + " outside model input width " +
                        std::to_string(model.input_width()));
  for (TokenId t : data.targets)
    if (t >= model.output_width())
      throw ConfigError("target token " + std::to_string(t) + " outside model output width");
}

constexpr std::size_t kChunk = 2048;

}  // namespace

Eigen::MatrixXd forward_batch(const RecurrentModel& model, const WindowDataset& data,
                              std::span<const std::size_t> indices) {
  check_inputs(model, data);
  const auto idx = all_indices(data, indices);
  detail::LstmEngine<double> engine(model.params);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(model.output_width()),
                      static_cast<Eigen::Index>(idx.size()));
  for (std::size_t b = 0; b < idx.size(); b += kChunk) {
    const std::size_t n = std::min(kChunk, idx.size() - b);
    Eigen::MatrixXd logp = engine.run(data, std::span(idx).subspan(b, n), nullptr);
    detail::LstmEngine<double>::log_softmax(logp);
    out.middleCols(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(n)) =
        logp.array().exp().matrix();
  }
  return out;
}

std::vector<double> forward(const RecurrentModel& model, std::span<const TokenId> window) {
  WindowDataset d;
  d.window = window.size();
  d.inputs.assign(window.begin(), window.end());
  d.targets.push_back(0);
  const Eigen::MatrixXd p = forward_batch(model, d);
  return {p.data(), p.data() + p.size()};
}

double loss(const RecurrentModel& model, const WindowDataset& data,
            std::span<const std::size_t> indices) {
  check_inputs(model, data);
  const auto idx = all_indices(data, indices);
  if (idx.empty()) return 0.0;
  detail::LstmEngine<double> engine(model.params);
  double total = 0.0;
  for (std::size_t b = 0; b < idx.size(); b += kChunk) {
    const std::size_t n = std::min(kChunk, idx.size() - b);
    const auto chunk = std::span(idx).subspan(b, n);
    Eigen::MatrixXd logp = engine.run(data, chunk, nullptr);
    detail::LstmEngine<double>::log_softmax(logp);
    for (std::size_t j = 0; j < n; ++j)
      total -= logp(static_cast<Eigen::Index>(data.targets[chunk[j]]), static_cast<Eigen::Index>(j));
  }
  return total / static_cast<double>(idx.size());
}

Gradients backward(const RecurrentModel& model, const WindowDataset& data,
                   std::span<const std::size_t> indices) {
  check_inputs(model, data);
  const auto idx = all_indices(data, indices);
  if (idx.empty()) throw ConfigError("backward on an empty batch");
  Gradients g;
  g.loss = detail::LstmEngine<double>(model.params).backward(data, idx, g.grad);
  return g;
}

std::vector<TokenId> predict_all(const RecurrentModel& model, const WindowDataset& data) {
  const Eigen::MatrixXd p = forward_batch(model, data);
  std::vector<TokenId> out(data.size());
  for (Eigen::Index b = 0; b < p.cols(); ++b) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < p.rows(); ++i)
      if (p(i, b) > p(best, b)) best = i;
    out[static_cast<std::size_t>(b)] = static_cast<TokenId>(best);
  }
  return out;
}

TokenId predict(const RecurrentModel& model, std::span<const TokenId> window) {
  const auto p = forward(model, window);
  return static_cast<TokenId>(std::max_element(p.begin(), p.end()) - p.begin());
}

double accuracy(const RecurrentModel& model, const WindowDataset& data) {
  if (data.size() == 0) return 0.0;
  const auto pred = predict_all(model, data);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.targets[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::pair<TokenId, std::size_t> predict_joint(const RecurrentModel& model,
                                              const Vocabulary& vocabulary,
                                              std::span<const TokenId> window) {
  if (!vocabulary.is_composite()) throw ConfigError("predict_joint needs a composite vocabulary");
  if (vocabulary.size() != model.output_width())
    throw ConfigError("model output width does not match the vocabulary");
  return vocabulary.decompose(predict(model, window));
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

nlohmann::ordered_json vocab_json(const Vocabulary& v) {
  nlohmann::ordered_json j;
  if (v.is_composite()) {
    j["base"] = v.base_tokens();
    j["time"] = v.time_names();
  } else {
    j["tokens"] = v.tokens();
  }
  return j;
}

Vocabulary vocab_from_json(const nlohmann::json& j) {
  if (j.contains("time"))
    return Vocabulary::composite(Vocabulary(j.at("base").get<std::vector<std::string>>()),
                                 j.at("time").get<std::vector<std::string>>());
  return Vocabulary(j.at("tokens").get<std::vector<std::string>>());
}

template <typename M>
nlohmann::ordered_json matrix_json(const M& m) {
  nlohmann::ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());  // column-major
  return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ConfigError("checkpoint tensor has the wrong number of values");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

}  // namespace

std::string save_checkpoint(const Checkpoint& ck) {
  nlohmann::ordered_json doc;
  doc["format"] = "homeseq-lstm/1";
  const auto& c = ck.config;
  doc["config"] = {{"memory_length", c.memory_length}, {"hidden", c.hidden},
                   {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
                   {"max_epochs", c.max_epochs},       {"patience", c.patience},
                   {"beta1", c.beta1},                 {"beta2", c.beta2},
                   {"epsilon", c.epsilon},             {"seed", c.seed},
                   {"single_precision", c.single_precision}};
  doc["input_vocabulary"] = vocab_json(ck.input_vocabulary);
  doc["output_vocabulary"] = vocab_json(ck.output_vocabulary);
  const auto& p = ck.model.params;
  doc["parameters"] = {{"w_input", matrix_json(p.w_input)},
                       {"w_recurrent", matrix_json(p.w_recurrent)},
                       {"bias", matrix_json(p.bias)},
                       {"w_output", matrix_json(p.w_output)},
                       {"b_output", matrix_json(p.b_output)}};
  return doc.dump(1) + "\n";
}

Checkpoint load_checkpoint(std::string_view text) {
  Checkpoint ck;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format") != "homeseq-lstm/1") throw ConfigError("unsupported checkpoint format");
    const auto& c = doc.at("config");
    ck.config.memory_length = c.at("memory_length").get<std::size_t>();
    ck.config.hidden = c.at("hidden").get<std::size_t>();
    ck.config.learning_rate = c.at("learning_rate").get<double>();
    ck.config.batch_size = c.at("batch_size").get<std::size_t>();
    ck.config.max_epochs = c.at("max_epochs").get<std::size_t>();
    ck.config.patience = c.at("patience").get<std::size_t>();
    ck.config.beta1 = c.at("beta1").get<double>();
    ck.config.beta2 = c.at("beta2").get<double>();
    ck.config.epsilon = c.at("epsilon").get<double>();
    ck.config.seed = c.at("seed").get<std::uint64_t>();
    ck.config.single_precision = c.at("single_precision").get<bool>();
    ck.input_vocabulary = vocab_from_json(doc.at("input_vocabulary"));
    ck.output_vocabulary = vocab_from_json(doc.at("output_vocabulary"));
    const auto& p = doc.at("parameters");
    ck.model.params.w_input = matrix_from_json(p.at("w_input"));
    ck.model.params.w_recurrent = matrix_from_json(p.at("w_recurrent"));
    ck.model.params.bias = matrix_from_json(p.at("bias"));
    ck.model.params.w_output = matrix_from_json(p.at("w_output"));
    ck.model.params.b_output = matrix_from_json(p.at("b_output"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  const auto& m = ck.model;
  const auto h = static_cast<Eigen::Index>(m.hidden());
  if (m.params.w_input.rows() != 4 * h || m.params.w_recurrent.rows() != 4 * h ||
      m.params.bias.size() != 4 * h || m.params.w_output.cols() != h ||
      m.params.b_output.size() != m.params.w_output.rows())
    throw ConfigError("checkpoint: inconsistent tensor shapes");
  if (m.input_width() != ck.input_vocabulary.input_width() ||
      m.output_width() != ck.output_vocabulary.size())
    throw ConfigError("checkpoint: tensor shapes do not match the vocabularies");
  if (!m.all_finite()) throw ConfigError("checkpoint: non-finite parameters");
  return ck;
}

}  // namespace homeseq
