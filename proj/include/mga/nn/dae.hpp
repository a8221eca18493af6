// Copyright 2026 The mgatune Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <random>
#include <vector>

#include "mga/error.hpp"
#include "mga/nn/params.hpp"
#include "mga/preprocess.hpp"

namespace mga::nn {

// Encoder-code-decoder: D -> E -> C -> E -> D with sigmoid hidden layers and
// a linear reconstruction layer.
struct DaeLayout {
  std::size_t W1, b1, W2, b2, W3, b3, W4, b4;
  Eigen::Index input = 0, hidden = 0, code = 0;
};

struct Dae {
  ParameterStore params;
  DaeLayout layout;

  Dae() = default;
  Dae(Eigen::Index input, Eigen::Index hidden, Eigen::Index code) {
    if (input <= 0 || hidden <= 0 || code <= 0) throw Error(ErrorKind::kShape, "autoencoder sizes must be positive");
    auto& l = layout;
    l.input = input;
    l.hidden = hidden;
    l.code = code;
    l.W1 = params.add("dae.enc_hidden.weight", hidden, input);
    l.b1 = params.add("dae.enc_hidden.bias", hidden, 1);
    l.W2 = params.add("dae.code.weight", code, hidden);
    l.b2 = params.add("dae.code.bias", code, 1);
    l.W3 = params.add("dae.dec_hidden.weight", hidden, code);
    l.b3 = params.add("dae.dec_hidden.bias", hidden, 1);
    l.W4 = params.add("dae.output.weight", input, hidden);
    l.b4 = params.add("dae.output.bias", input, 1);
  }

  void init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto i : {layout.W1, layout.W2, layout.W3, layout.W4}) glorot_uniform(params[i], rng);
    for (auto i : {layout.b1, layout.b2, layout.b3, layout.b4}) params[i].setZero();
  }
};

struct DaeActivations {
  Matrix hidden1, code, hidden2, output;
};

inline Matrix dense(const Matrix& x, const Matrix& W, const Matrix& b) {
  Matrix y = x * W.transpose();
  y.rowwise() += b.col(0).transpose();
  return y;
}

inline DaeActivations dae_forward(const Dae& dae, const Matrix& x) {
  const auto& p = dae.params;
  const auto& l = dae.layout;
  if (x.cols() != l.input)
    throw Error(ErrorKind::kShape, "autoencoder expects dimension " + std::to_string(l.input) + ", got " +
                                       std::to_string(x.cols()));
  DaeActivations a;
  a.hidden1 = sigmoid(dense(x, p[l.W1], p[l.b1]));
  a.code = sigmoid(dense(a.hidden1, p[l.W2], p[l.b2]));
  a.hidden2 = sigmoid(dense(a.code, p[l.W3], p[l.b3]));
  a.output = dense(a.hidden2, p[l.W4], p[l.b4]);
  return a;
}

// Rows of `x` to bottleneck codes. No noise is applied.
inline Matrix dae_encode(const Dae& dae, const Matrix& x) { return dae_forward(dae, x).code; }

inline Vector dae_encode(const Dae& dae, const Vector& x) {
  return dae_forward(dae, x.transpose()).code.row(0).transpose();
}

inline Matrix dae_reconstruct(const Dae& dae, const Matrix& x) { return dae_forward(dae, x).output; }

// Mean squared error between the reconstruction of `input` and `target`
// (averaged over every cell). Fills `grads` when given.
inline double dae_loss(const Dae& dae, const Matrix& input, const Matrix& target, Gradients* grads = nullptr) {
  const auto a = dae_forward(dae, input);
  const Matrix diff = a.output - target;
  const double count = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / count;
  if (!grads) return loss;

  const auto& p = dae.params;
  const auto& l = dae.layout;
  auto& g = *grads;
  const Matrix d_out = diff * (2.0 / count);
  g[l.W4] += d_out.transpose() * a.hidden2;
  g[l.b4] += d_out.colwise().sum().transpose();
  const Matrix d_h2 = (d_out * p[l.W4]).cwiseProduct(a.hidden2.cwiseProduct((1.0 - a.hidden2.array()).matrix()));
  g[l.W3] += d_h2.transpose() * a.code;
  g[l.b3] += d_h2.colwise().sum().transpose();
  const Matrix d_code = (d_h2 * p[l.W3]).cwiseProduct(a.code.cwiseProduct((1.0 - a.code.array()).matrix()));
  g[l.W2] += d_code.transpose() * a.hidden1;
  g[l.b2] += d_code.colwise().sum().transpose();
  const Matrix d_h1 = (d_code * p[l.W2]).cwiseProduct(a.hidden1.cwiseProduct((1.0 - a.hidden1.array()).matrix()));
  g[l.W1] += d_h1.transpose() * input;
  g[l.b1] += d_h1.colwise().sum().transpose();
  return loss;
}

struct DaeTrainOptions {
  double swap_rate = 0.10;
  int epochs = 200;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  std::function<void(const std::string&)> warn;
};

// Gauss-rank scaled columns have unit-ish variance; far off means the caller
// skipped scaling.
inline bool looks_unscaled(const Matrix& x) {
  if (x.rows() < 2) return false;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const double var = (x.col(c).array() - mean).square().sum() / static_cast<double>(x.rows() - 1);
    if (var > 0.0 && (var < 0.1 || var > 10.0)) return true;
  }
  return false;
}

// Trains on swap-noise corrupted copies of `x` to reconstruct the clean rows.
// Returns the per-epoch loss, measured before each update.
inline std::vector<double> dae_pretrain(Dae& dae, const Matrix& x, const DaeTrainOptions& opts, std::uint64_t seed) {
  if (x.rows() == 0) throw Error(ErrorKind::kInput, "autoencoder pretraining on an empty matrix");
  if (opts.warn && looks_unscaled(x))
    opts.warn("autoencoder input does not look gauss-rank scaled (column variance far from 1)");
  AdamW opt(dae.params, opts.learning_rate, opts.weight_decay);
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(opts.epochs));
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    auto grads = dae.params.zeros_like();
    const Matrix noisy =
        opts.swap_rate > 0.0 ? swap_noise(x, opts.swap_rate, derive_seed(seed, static_cast<std::uint64_t>(epoch))).corrupted
                             : x;
    losses.push_back(dae_loss(dae, noisy, x, &grads));
    opt.step(dae.params, grads);
  }
  return losses;
}

}  // namespace mga::nn
