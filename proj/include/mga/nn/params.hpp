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

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "mga/error.hpp"

namespace mga::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Gradients = std::vector<Matrix>;

// Derives independent sub-seeds from one user seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Named, shaped parameter arrays addressed by the index returned from add().
class ParameterStore {
 public:
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    names_.push_back(std::move(name));
    values_.push_back(Matrix::Zero(rows, cols));
    return values_.size() - 1;
  }

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  Matrix& operator[](std::size_t i) { return values_[i]; }
  const Matrix& operator[](std::size_t i) const { return values_[i]; }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
    return n;
  }

  Gradients zeros_like() const {
    Gradients g;
    g.reserve(values_.size());
    for (const auto& v : values_) g.push_back(Matrix::Zero(v.rows(), v.cols()));
    return g;
  }

  bool all_finite() const {
    for (const auto& v : values_)
      if (!v.allFinite()) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const auto& v = values_[i];
      arr.push_back({{"name", names_[i]},
                     {"shape", {v.rows(), v.cols()}},
                     {"data", std::vector<double>(v.data(), v.data() + v.size())}});
    }
    return arr;
  }

  // Loads values into an already laid-out store, checking names and shapes.
  void load_json(const nlohmann::json& arr) {
    if (arr.size() != values_.size())
      throw Error(ErrorKind::kFormat, "parameter count mismatch: expected " + std::to_string(values_.size()) +
                                          ", got " + std::to_string(arr.size()));
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const auto& e = arr[i];
      const auto name = e.at("name").get<std::string>();
      const auto shape = e.at("shape").get<std::vector<Eigen::Index>>();
      const auto data = e.at("data").get<std::vector<double>>();
      if (name != names_[i] || shape.size() != 2 || shape[0] != values_[i].rows() ||
          shape[1] != values_[i].cols() || static_cast<Eigen::Index>(data.size()) != values_[i].size())
        throw Error(ErrorKind::kFormat, "parameter '" + name + "' does not match layout '" + names_[i] + "'");
      values_[i] = Eigen::Map<const Matrix>(data.data(), shape[0], shape[1]);
    }
  }

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
    if (a.names_ != b.names_) return false;
    for (std::size_t i = 0; i < a.values_.size(); ++i)
      if (a.values_[i].rows() != b.values_[i].rows() || a.values_[i].cols() != b.values_[i].cols() ||
          a.values_[i] != b.values_[i])
        return false;
    return true;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

inline void glorot_uniform(Matrix& m, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> d(-limit, limit);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
}

inline void normal_init(Matrix& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
}

// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(const ParameterStore& params, double lr, double weight_decay, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(params.zeros_like()), v_(params.zeros_like()) {}

  void step(ParameterStore& params, const Gradients& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
      p *= (1.0 - lr_ * wd_);
      p.array() -= lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
    }
  }

  int steps() const { return t_; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  Gradients m_, v_;
  int t_ = 0;
};

inline Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

}  // namespace mga::nn
