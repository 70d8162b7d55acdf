// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "homeseq/error.hpp"
#include "homeseq/lstm.hpp"
#include "lstm_engine.hpp"

namespace homeseq {
namespace {

template <typename T>
struct Adam {
  BasicLstmParameters<T> m, v;
  double beta1, beta2, epsilon, lr;
  std::size_t step = 0;

  Adam(const BasicLstmParameters<T>& like, const LstmConfig& c)
      : m(BasicLstmParameters<T>::zeros(static_cast<std::size_t>(like.w_input.cols()),
                                        static_cast<std::size_t>(like.w_output.rows()),
                                        static_cast<std::size_t>(like.w_recurrent.cols()))),
        v(m), beta1(c.beta1), beta2(c.beta2), epsilon(c.epsilon), lr(c.learning_rate) {}

  void apply(BasicLstmParameters<T>& params, BasicLstmParameters<T>& grad) {
    ++step;
    const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
    const T c1 = static_cast<T>(1.0 - std::pow(beta1, static_cast<double>(step)));
    const T c2 = static_cast<T>(1.0 - std::pow(beta2, static_cast<double>(step)));
    const T eps = static_cast<T>(epsilon), rate = static_cast<T>(lr);
    std::vector<std::span<T>> ps, gs, ms, vs;
    params.for_each_tensor([&](std::span<T> s) { ps.push_back(s); });
    grad.for_each_tensor([&](std::span<T> s) { gs.push_back(s); });
    m.for_each_tensor([&](std::span<T> s) { ms.push_back(s); });
    v.for_each_tensor([&](std::span<T> s) { vs.push_back(s); });
    for (std::size_t k = 0; k < ps.size(); ++k) {
      for (std::size_t i = 0; i < ps[k].size(); ++i) {
        const T g = gs[k][i];
        ms[k][i] = b1 * ms[k][i] + (T(1) - b1) * g;
        vs[k][i] = b2 * vs[k][i] + (T(1) - b2) * g * g;
        ps[k][i] -= rate * (ms[k][i] / c1) / (std::sqrt(vs[k][i] / c2) + eps);
      }
    }
  }
};

template <typename T>
std::pair<double, double> evaluate_set(const detail::LstmEngine<T>& engine,
                                       const WindowDataset& data) {
  constexpr std::size_t chunk = 2048;
  double total = 0.0;
  std::size_t hits = 0;
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t b = 0; b < idx.size(); b += chunk) {
    const std::size_t n = std::min(chunk, idx.size() - b);
    const auto part = std::span<const std::size_t>(idx).subspan(b, n);
    auto logp = engine.run(data, part, nullptr);
    detail::LstmEngine<T>::log_softmax(logp);
    for (std::size_t j = 0; j < n; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      const auto y = static_cast<Eigen::Index>(data.targets[part[j]]);
      total -= static_cast<double>(logp(y, col));
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < logp.rows(); ++i)
        if (logp(i, col) > logp(best, col)) best = i;
      hits += best == y;
    }
  }
  if (idx.empty()) return {0.0, 0.0};
  const auto n = static_cast<double>(idx.size());
  return {total / n, static_cast<double>(hits) / n};
}

template <typename T>
TrainResult train_impl(RecurrentModel model, const WindowDataset& train_set,
                       const WindowDataset& validation_set, const LstmConfig& config,
                       const EpochCallback& on_epoch) {
  BasicLstmParameters<T> params = model.params.template cast<T>();
  Adam<T> adam(params, config);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.model = model;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  BasicLstmParameters<T> grad;
  const bool use_validation = validation_set.size() > 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - b);
      const auto batch = std::span<const std::size_t>(order).subspan(b, n);
      const T l = detail::LstmEngine<T>(params).backward(train_set, batch, grad);
      train_total += static_cast<double>(l) * static_cast<double>(n);
      adam.apply(params, grad);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = order.empty() ? 0.0 : train_total / static_cast<double>(order.size());
    const detail::LstmEngine<T> engine(params);
    if (use_validation)
      std::tie(rec.validation_loss, rec.validation_accuracy) = evaluate_set(engine, validation_set);

    RecurrentModel current;
    current.params = params.template cast<double>();
    if (!current.all_finite()) throw Error("training diverged at epoch " + std::to_string(epoch));
    if (on_epoch) rec.monitor = on_epoch(current, epoch);
    result.history.push_back(rec);

    const double monitored = use_validation ? rec.validation_loss : rec.train_loss;
    if (monitored < best) {
      best = monitored;
      since_best = 0;
      result.best_epoch = epoch;
      result.model = std::move(current);
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace

TrainResult train(RecurrentModel model, const WindowDataset& train_set,
                  const WindowDataset& validation_set, const LstmConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size() == 0) throw ConfigError("empty training set");
  if (train_set.window != config.memory_length)
    throw ConfigError("dataset window does not match the configured memory length");
  for (const WindowDataset* d : {&train_set, &validation_set}) {
    for (TokenId t : d->inputs)
      if (t >= model.input_width()) throw ConfigError("input token outside model input width");
    for (TokenId t : d->targets)
      if (t >= model.output_width()) throw ConfigError("target token outside model output width");
  }
  if (validation_set.size() > 0 && validation_set.window != train_set.window)
    throw ConfigError("validation window differs from the training window");
  if (config.single_precision)
    return train_impl<float>(std::move(model), train_set, validation_set, config, on_epoch);
  return train_impl<double>(std::move(model), train_set, validation_set, config, on_epoch);
}

}  // namespace homeseq
