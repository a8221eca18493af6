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

#include <random>
#include <vector>

#include "mga/error.hpp"
#include "mga/nn/dae.hpp"
#include "mga/nn/params.hpp"

namespace mga::nn {

// One ReLU hidden layer over the fused feature vector, softmax output.
struct FusionLayout {
  std::size_t W1, b1, W2, b2;
  Eigen::Index input = 0, hidden = 0, classes = 0;
};

inline FusionLayout add_fusion(ParameterStore& store, Eigen::Index input, Eigen::Index hidden, Eigen::Index classes) {
  if (input <= 0 || hidden <= 0 || classes <= 0)
    throw Error(ErrorKind::kShape, "fusion head sizes must be positive");
  FusionLayout l;
  l.input = input;
  l.hidden = hidden;
  l.classes = classes;
  l.W1 = store.add("fusion.hidden.weight", hidden, input);
  l.b1 = store.add("fusion.hidden.bias", hidden, 1);
  l.W2 = store.add("fusion.output.weight", classes, hidden);
  l.b2 = store.add("fusion.output.bias", classes, 1);
  return l;
}

inline void init_fusion(ParameterStore& store, const FusionLayout& l, std::mt19937_64& rng) {
  glorot_uniform(store[l.W1], rng);
  glorot_uniform(store[l.W2], rng);
  store[l.b1].setZero();
  store[l.b2].setZero();
}

struct FusionActivations {
  Matrix hidden;  // post-ReLU
  Matrix probs;
};

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    const auto e = (logits.row(r).array() - mx).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

// Rows of `x` are concatenated [graph embedding | code | aux] vectors.
inline FusionActivations fusion_forward(const ParameterStore& p, const FusionLayout& l, const Matrix& x) {
  if (x.cols() != l.input)
    throw Error(ErrorKind::kShape, "fusion head expects width " + std::to_string(l.input) + ", got " +
                                       std::to_string(x.cols()));
  FusionActivations a;
  a.hidden = dense(x, p[l.W1], p[l.b1]).cwiseMax(0.0);
  a.probs = softmax_rows(dense(a.hidden, p[l.W2], p[l.b2]));
  return a;
}

inline Vector fuse_and_classify(const ParameterStore& p, const FusionLayout& l, const Vector& graph_embedding,
                                const Vector& code, const Vector& aux) {
  if (graph_embedding.size() + code.size() + aux.size() != l.input)
    throw Error(ErrorKind::kShape, "fused width " +
                                       std::to_string(graph_embedding.size() + code.size() + aux.size()) +
                                       " does not match fusion head width " + std::to_string(l.input));
  Matrix x(1, l.input);
  x << graph_embedding.transpose(), code.transpose(), aux.transpose();
  return fusion_forward(p, l, x).probs.row(0).transpose();
}

// Mean cross-entropy over rows. Accumulates parameter gradients and returns
// d(loss)/d(x) when `grads` is given.
inline double fusion_loss(const ParameterStore& p, const FusionLayout& l, const Matrix& x,
                          const std::vector<int>& labels, Gradients* grads = nullptr, Matrix* d_x = nullptr,
                          FusionActivations* acts = nullptr) {
  auto a = fusion_forward(p, l, x);
  const double n = static_cast<double>(x.rows());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    loss -= std::log(std::max(a.probs(r, labels[static_cast<std::size_t>(r)]), 1e-300));
  loss /= n;
  if (grads) {
    Matrix d_logits = a.probs;
    for (Eigen::Index r = 0; r < x.rows(); ++r) d_logits(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    d_logits /= n;
    (*grads)[l.W2] += d_logits.transpose() * a.hidden;
    (*grads)[l.b2] += d_logits.colwise().sum().transpose();
    Matrix d_hidden = d_logits * p[l.W2];
    d_hidden = d_hidden.cwiseProduct((a.hidden.array() > 0.0).cast<double>().matrix());
    (*grads)[l.W1] += d_hidden.transpose() * x;
    (*grads)[l.b1] += d_hidden.colwise().sum().transpose();
    if (d_x) *d_x = d_hidden * p[l.W1];
  }
  if (acts) *acts = std::move(a);
  return loss;
}

}  // namespace mga::nn
