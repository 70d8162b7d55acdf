// SPDX-License-Identifier: Apache-2.0
//
// Batched LSTM forward/backward, templated on the scalar type.
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "homeseq/lstm.hpp"

namespace homeseq::detail {

template <typename T>
struct LstmEngine {
  using Params = BasicLstmParameters<T>;
  using Matrix = typename Params::Matrix;
  using Array = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic>;

  struct Step {
    Matrix gates;  // activated gates, 4H x B
    Matrix cell;   // c_t
    Matrix hidden; // h_t
  };

  const Params& p;
  Eigen::Index h = 0;

  explicit LstmEngine(const Params& params) : p(params), h(params.w_recurrent.cols()) {}

  template <typename Block>
  static void sigmoid_inplace(Block&& block) {
    block = (T(1) / (T(1) + (-block.array()).exp())).matrix();
  }

  /// Runs the window for every selected sample. Returns logits (O x B).
  Matrix run(const WindowDataset& data, std::span<const std::size_t> idx, std::vector<Step>* steps) const {
    const auto batch = static_cast<Eigen::Index>(idx.size());
    const std::size_t window = data.window;
    Matrix hprev = Matrix::Zero(h, batch);
    Matrix cprev = Matrix::Zero(h, batch);
    if (steps) steps->resize(window);
    Matrix z(4 * h, batch);
    for (std::size_t t = 0; t < window; ++t) {
      z.noalias() = p.w_recurrent * hprev;
      z.colwise() += p.bias;
      for (Eigen::Index b = 0; b < batch; ++b)
        z.col(b) += p.w_input.col(data.inputs[idx[static_cast<std::size_t>(b)] * window + t]);
      sigmoid_inplace(z.middleRows(0, h));
      sigmoid_inplace(z.middleRows(h, h));
      z.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
      sigmoid_inplace(z.middleRows(3 * h, h));
      Matrix c = (z.middleRows(h, h).array() * cprev.array() +
                  z.middleRows(0, h).array() * z.middleRows(2 * h, h).array()).matrix();
      Matrix hn = (z.middleRows(3 * h, h).array() * c.array().tanh()).matrix();
      if (steps) {
        (*steps)[t].gates = z;
        (*steps)[t].cell = c;
        (*steps)[t].hidden = hn;
      }
      cprev = std::move(c);
      hprev = std::move(hn);
    }
    Matrix logits = p.w_output * hprev;
    logits.colwise() += p.b_output;
    return logits;
  }

  /// Column-wise log-softmax in place.
  static void log_softmax(Matrix& logits) {
    for (Eigen::Index b = 0; b < logits.cols(); ++b) {
      auto col = logits.col(b);
      const T mx = col.maxCoeff();
      const T lse = mx + std::log((col.array() - mx).exp().sum());
      col.array() -= lse;
    }
  }

  /// Gradient of the mean loss; returns the loss.
  T backward(const WindowDataset& data, std::span<const std::size_t> idx, Params& g) const {
    std::vector<Step> steps;
    Matrix logp = run(data, idx, &steps);
    log_softmax(logp);
    const auto batch = static_cast<Eigen::Index>(idx.size());
    const std::size_t window = data.window;
    const T inv_b = T(1) / static_cast<T>(batch);

    T total = 0;
    Matrix dlogits = logp.array().exp().matrix();
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto y = static_cast<Eigen::Index>(data.targets[idx[static_cast<std::size_t>(b)]]);
      total -= logp(y, b);
      dlogits(y, b) -= T(1);
    }
    dlogits *= inv_b;

    g = Params::zeros(static_cast<std::size_t>(p.w_input.cols()),
                      static_cast<std::size_t>(p.w_output.rows()), static_cast<std::size_t>(h));
    const Matrix& h_last = steps.back().hidden;
    g.w_output.noalias() = dlogits * h_last.transpose();
    g.b_output = dlogits.rowwise().sum();

    Matrix dh = p.w_output.transpose() * dlogits;
    Matrix dc = Matrix::Zero(h, batch);
    Matrix dz(4 * h, batch);
    const Matrix zeros = Matrix::Zero(h, batch);
    for (std::size_t tt = window; tt-- > 0;) {
      const Step& s = steps[tt];
      const Matrix& cprev = tt > 0 ? steps[tt - 1].cell : zeros;
      const Matrix& hprev = tt > 0 ? steps[tt - 1].hidden : zeros;
      const auto gi = s.gates.middleRows(0, h).array();
      const auto gf = s.gates.middleRows(h, h).array();
      const auto gg = s.gates.middleRows(2 * h, h).array();
      const auto go = s.gates.middleRows(3 * h, h).array();
      const Array tc = s.cell.array().tanh();

      dc.array() += dh.array() * go * (T(1) - tc.square());
      dz.middleRows(0, h) = (dc.array() * gg * gi * (T(1) - gi)).matrix();
      dz.middleRows(h, h) = (dc.array() * cprev.array() * gf * (T(1) - gf)).matrix();
      dz.middleRows(2 * h, h) = (dc.array() * gi * (T(1) - gg.square())).matrix();
      dz.middleRows(3 * h, h) = (dh.array() * tc * go * (T(1) - go)).matrix();

      g.w_recurrent.noalias() += dz * hprev.transpose();
      g.bias += dz.rowwise().sum();
      for (Eigen::Index b = 0; b < batch; ++b)
        g.w_input.col(data.inputs[idx[static_cast<std::size_t>(b)] * window + tt]) += dz.col(b);

      dh.noalias() = p.w_recurrent.transpose() * dz;
      dc = (dc.array() * gf).matrix();
    }
    return total * inv_b;
  }
};

}  // namespace homeseq::detail
