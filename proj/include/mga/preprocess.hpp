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
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "json.hpp"
#include "mga/dataset.hpp"
#include "mga/error.hpp"
#include "mga/text.hpp"

namespace mga {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// ---------------------------------------------------------------------------
// Gaussian rank scaling
// ---------------------------------------------------------------------------

// Maps each column onto a standard normal through its empirical rank in the
// fitted reference. Positions between reference values are interpolated, so
// the transform is strictly increasing over the fitted range and flat outside.
class GaussRankScaler {
 public:
  explicit GaussRankScaler(double epsilon = 1e-6) : epsilon_(epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5))
      throw Error(ErrorKind::kInput, "gauss-rank epsilon must lie in (0, 0.5)");
  }

  void fit(const Matrix& columns) {
    if (columns.rows() == 0) throw Error(ErrorKind::kInput, "gauss-rank fit on empty matrix");
    std::vector<std::vector<double>> refs(static_cast<std::size_t>(columns.cols()));
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
      auto& r = refs[static_cast<std::size_t>(c)];
      r.assign(columns.col(c).data(), columns.col(c).data() + columns.rows());
      std::sort(r.begin(), r.end());
    }
    set_reference(std::move(refs));
  }

  bool fitted() const { return !columns_.empty(); }
  std::size_t num_columns() const { return columns_.size(); }
  double epsilon() const { return epsilon_; }

  double transform_value(std::size_t column, double x) const {
    require_fitted();
    const auto& col = columns_.at(column);
    if (col.knots.size() < 2) return 0.0;
    double pos;
    if (x <= col.knots.front()) {
      pos = col.ranks.front();
    } else if (x >= col.knots.back()) {
      pos = col.ranks.back();
    } else {
      const auto hi = static_cast<std::size_t>(
          std::upper_bound(col.knots.begin(), col.knots.end(), x) - col.knots.begin());
      const std::size_t lo = hi - 1;
      const double t = (x - col.knots[lo]) / (col.knots[hi] - col.knots[lo]);
      pos = col.ranks[lo] + t * (col.ranks[hi] - col.ranks[lo]);
    }
    const double n = static_cast<double>(col.reference.size());
    const double u = std::clamp((pos + 0.5) / n, epsilon_, 1.0 - epsilon_);
    return boost::math::quantile(boost::math::normal(), u);
  }

  Matrix transform(const Matrix& columns) const {
    require_fitted();
    if (static_cast<std::size_t>(columns.cols()) != columns_.size())
      throw Error(ErrorKind::kShape, "gauss-rank transform expects " + std::to_string(columns_.size()) +
                                         " columns, got " + std::to_string(columns.cols()));
    Matrix out(columns.rows(), columns.cols());
    for (Eigen::Index c = 0; c < columns.cols(); ++c)
      for (Eigen::Index r = 0; r < columns.rows(); ++r)
        out(r, c) = transform_value(static_cast<std::size_t>(c), columns(r, c));
    return out;
  }

  Vector transform_row(std::span<const double> row) const {
    require_fitted();
    if (row.size() != columns_.size())
      throw Error(ErrorKind::kShape, "gauss-rank transform expects " + std::to_string(columns_.size()) +
                                         " values, got " + std::to_string(row.size()));
    Vector out(static_cast<Eigen::Index>(row.size()));
    for (std::size_t c = 0; c < row.size(); ++c) out(static_cast<Eigen::Index>(c)) = transform_value(c, row[c]);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : columns_) cols.push_back(c.reference);
    return {{"epsilon", epsilon_}, {"reference", cols}};
  }

  static GaussRankScaler from_json(const nlohmann::json& j) {
    GaussRankScaler s(j.at("epsilon").get<double>());
    std::vector<std::vector<double>> refs;
    for (const auto& c : j.at("reference")) refs.push_back(c.get<std::vector<double>>());
    if (!refs.empty()) s.set_reference(std::move(refs));
    return s;
  }

 private:
  struct Column {
    std::vector<double> reference;  // sorted, with duplicates
    std::vector<double> knots;      // distinct values
    std::vector<double> ranks;      // mean 0-based rank of each knot
  };

  void require_fitted() const {
    if (!fitted()) throw Error(ErrorKind::kState, "gauss-rank scaler used before fit");
  }

  void set_reference(std::vector<std::vector<double>> refs) {
    columns_.clear();
    for (auto& r : refs) {
      if (r.empty()) throw Error(ErrorKind::kState, "gauss-rank reference column is empty");
      Column col;
      col.reference = std::move(r);
      std::size_t i = 0;
      while (i < col.reference.size()) {
        std::size_t j = i;
        while (j + 1 < col.reference.size() && col.reference[j + 1] == col.reference[i]) ++j;
        col.knots.push_back(col.reference[i]);
        col.ranks.push_back(0.5 * static_cast<double>(i + j));
        i = j + 1;
      }
      columns_.push_back(std::move(col));
    }
  }

  double epsilon_;
  std::vector<Column> columns_;
};

// ---------------------------------------------------------------------------
// Swap noise
// ---------------------------------------------------------------------------

struct SwapNoise {
  Matrix corrupted;
  Mask mask;  // true where the cell was resampled
};

// In every column exactly round(rate * n) cells are replaced by a value drawn
// (with replacement) from the same column of the input.
inline SwapNoise swap_noise(const Matrix& columns, double rate, std::uint64_t seed) {
  if (columns.rows() == 0 || columns.cols() == 0)
    throw Error(ErrorKind::kInput, "swap noise on an empty matrix");
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::kInput, "swap-noise rate must lie in [0, 1)");
  const auto n = static_cast<std::size_t>(columns.rows());
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));

  SwapNoise out{columns, Mask::Constant(columns.rows(), columns.cols(), false)};
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> rows(n);
  std::uniform_int_distribution<Eigen::Index> pick(0, columns.rows() - 1);
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    // Partial Fisher-Yates: the first `count` entries become the mask.
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, n - 1);
      std::swap(rows[i], rows[d(rng)]);
    }
    for (std::size_t i = 0; i < count; ++i) {
      out.mask(rows[i], c) = true;
      out.corrupted(rows[i], c) = columns(pick(rng), c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Min-max scaling
// ---------------------------------------------------------------------------

class MinMaxScaler {
 public:
  void fit(const Matrix& features) {
    if (features.rows() == 0) throw Error(ErrorKind::kInput, "min-max fit on empty matrix");
    min_.resize(static_cast<std::size_t>(features.cols()));
    max_.resize(static_cast<std::size_t>(features.cols()));
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      min_[static_cast<std::size_t>(c)] = features.col(c).minCoeff();
      max_[static_cast<std::size_t>(c)] = features.col(c).maxCoeff();
    }
    fitted_ = true;
  }

  bool fitted() const { return fitted_; }
  std::size_t num_features() const { return min_.size(); }
  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }

  double transform_value(std::size_t feature, double x) const {
    require_fitted();
    const double lo = min_.at(feature), hi = max_.at(feature);
    if (!(hi > lo)) return 0.0;
    return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
  }

  Vector transform_row(std::span<const double> row) const {
    require_fitted();
    if (row.size() != min_.size())
      throw Error(ErrorKind::kShape, "min-max transform expects " + std::to_string(min_.size()) +
                                         " features, got " + std::to_string(row.size()));
    Vector out(static_cast<Eigen::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) out(static_cast<Eigen::Index>(i)) = transform_value(i, row[i]);
    return out;
  }

  Matrix transform(const Matrix& features) const {
    require_fitted();
    if (static_cast<std::size_t>(features.cols()) != min_.size())
      throw Error(ErrorKind::kShape, "min-max transform column count mismatch");
    Matrix out(features.rows(), features.cols());
    for (Eigen::Index r = 0; r < features.rows(); ++r)
      for (Eigen::Index c = 0; c < features.cols(); ++c)
        out(r, c) = transform_value(static_cast<std::size_t>(c), features(r, c));
    return out;
  }

  nlohmann::json to_json() const { return {{"fitted", fitted_}, {"min", min_}, {"max", max_}}; }

  static MinMaxScaler from_json(const nlohmann::json& j) {
    MinMaxScaler s;
    s.fitted_ = j.at("fitted").get<bool>();
    s.min_ = j.at("min").get<std::vector<double>>();
    s.max_ = j.at("max").get<std::vector<double>>();
    return s;
  }

 private:
  void require_fitted() const {
    if (!fitted_) throw Error(ErrorKind::kState, "min-max scaler used before fit");
  }

  bool fitted_ = false;
  std::vector<double> min_, max_;
};

// ---------------------------------------------------------------------------
// Counter selection
// ---------------------------------------------------------------------------

// Sample Pearson correlation; 0 when either side is constant.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::kShape, "pearson: length mismatch");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct CounterScore {
  std::string name;
  double r = 0.0;
};

// Top-k counters by |r| against execution time. |r| is compared at 1e-12
// resolution so that rescaled columns keep their order; ties go alphabetical.
inline std::vector<CounterScore> pearson_select(const Matrix& counters,
                                                const std::vector<std::string>& names,
                                                std::span<const double> exec_times,
                                                std::size_t k = 5) {
  if (static_cast<std::size_t>(counters.cols()) != names.size())
    throw Error(ErrorKind::kShape, "counter matrix has " + std::to_string(counters.cols()) +
                                       " columns but " + std::to_string(names.size()) + " names");
  if (static_cast<std::size_t>(counters.rows()) != exec_times.size())
    throw Error(ErrorKind::kShape, "counter rows and execution times differ in length");
  if (counters.rows() < 3) throw Error(ErrorKind::kInput, "pearson selection needs at least 3 rows");
  if (std::all_of(exec_times.begin(), exec_times.end(), [&](double t) { return t == exec_times[0]; }))
    throw Error(ErrorKind::kInput, "execution times are constant");
  if (k > names.size())
    throw Error(ErrorKind::kSelection, "cannot select " + std::to_string(k) + " of " +
                                           std::to_string(names.size()) + " counters");

  std::vector<CounterScore> scores;
  for (Eigen::Index c = 0; c < counters.cols(); ++c) {
    const Vector col = counters.col(c);
    scores.push_back({names[static_cast<std::size_t>(c)],
                      pearson({col.data(), static_cast<std::size_t>(col.size())}, exec_times)});
  }
  auto key = [](double r) { return std::llround(std::abs(r) * 1e12); };
  std::sort(scores.begin(), scores.end(), [&](const CounterScore& a, const CounterScore& b) {
    const auto ka = key(a.r), kb = key(b.r);
    if (ka != kb) return ka > kb;
    return a.name < b.name;
  });
  scores.resize(k);
  return scores;
}

// ---------------------------------------------------------------------------
// Cross-microarchitecture counter scaling
// ---------------------------------------------------------------------------

struct ArchDescriptor {
  double l1_cache_size = 0;  // bytes
  double l2_cache_size = 0;
  double l3_cache_size = 0;
  double reference_clock_cycles = 0;  // per measurement window

  void validate() const {
    if (!(l1_cache_size > 0 && l2_cache_size > 0 && l3_cache_size > 0))
      throw Error(ErrorKind::kDescriptor, "cache sizes must be positive");
    if (!(reference_clock_cycles > 0))
      throw Error(ErrorKind::kDescriptor, "reference_clock_cycles must be positive");
  }

  nlohmann::json to_json() const {
    return {{"l1_cache_size", l1_cache_size},
            {"l2_cache_size", l2_cache_size},
            {"l3_cache_size", l3_cache_size},
            {"reference_clock_cycles", reference_clock_cycles}};
  }

  static ArchDescriptor from_json(const nlohmann::json& j) {
    ArchDescriptor a;
    try {
      a.l1_cache_size = j.at("l1_cache_size").get<double>();
      a.l2_cache_size = j.at("l2_cache_size").get<double>();
      a.l3_cache_size = j.at("l3_cache_size").get<double>();
      a.reference_clock_cycles = j.at("reference_clock_cycles").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kDescriptor, e.what());
    }
    a.validate();
    return a;
  }

  friend bool operator==(const ArchDescriptor&, const ArchDescriptor&) = default;
};

inline ArchDescriptor read_arch_descriptor(const std::filesystem::path& path) {
  try {
    return ArchDescriptor::from_json(nlohmann::json::parse(text::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kDescriptor, path.string() + ": " + e.what());
  }
}

struct CounterRecord {
  std::string kernel_id;
  std::string input_id;
  std::map<std::string, double> counters;
};

// Cache-miss counters follow the target/train cache-size ratio of their level;
// branch mispredictions become a per-reference-cycle rate on the target.
inline CounterRecord scale_counters_cross_arch(const CounterRecord& rec, const ArchDescriptor& train_arch,
                                               const ArchDescriptor& target_arch) {
  train_arch.validate();
  target_arch.validate();
  for (const auto& name : default_counter_schema())
    if (!rec.counters.count(name))
      throw Error(ErrorKind::kSchema, "counter record lacks '" + name + "'");
  CounterRecord out = rec;
  out.counters["l1_cache_misses"] *= target_arch.l1_cache_size / train_arch.l1_cache_size;
  out.counters["l2_cache_misses"] *= target_arch.l2_cache_size / train_arch.l2_cache_size;
  out.counters["l3_load_misses"] *= target_arch.l3_cache_size / train_arch.l3_cache_size;
  out.counters["branch_mispredictions"] /= target_arch.reference_clock_cycles;
  return out;
}

// Applies the scaling in place to an aux-feature row laid out by `names`.
inline void scale_aux_cross_arch(std::span<double> aux, const std::vector<std::string>& names,
                                 const ArchDescriptor& train_arch, const ArchDescriptor& target_arch) {
  CounterRecord rec;
  for (std::size_t i = 0; i < names.size(); ++i) rec.counters[names[i]] = aux[i];
  const auto scaled = scale_counters_cross_arch(rec, train_arch, target_arch);
  for (std::size_t i = 0; i < names.size(); ++i) aux[i] = scaled.counters.at(names[i]);
}

}  // namespace mga
