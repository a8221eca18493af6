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


// Fixtures and independent reference implementations shared by the unit
// tests and the acceptance binary. The references are deliberately naive:
// scalar loops, no Eigen expressions, no shared code with the library.

#pragma once

#include <algorithm>
#include <atomic>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "mga/dataset.hpp"
#include "mga/nn/ggnn.hpp"
#include "mga/text.hpp"

namespace mga::testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("mga_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

struct Caught {
  bool thrown = false;
  ErrorKind kind = ErrorKind::kFormat;
  std::string what;
};

// Runs `fn` and records the mga::Error it throws, if any.
template <typename F>
Caught catch_error(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return {true, e.kind(), e.what()};
  }
  return {};
}

inline Node instr(int id, std::string token = "add") { return {id, NodeKind::kInstruction, std::move(token)}; }
inline Node var(int id, std::string token = "i32") { return {id, NodeKind::kVariable, std::move(token)}; }
inline Node cnst(int id, std::string token = "i32") { return {id, NodeKind::kConstant, std::move(token)}; }

// Random valid flow graph with `n` nodes (at least one instruction).
inline FlowGraph random_graph(int n, int n_edges, std::mt19937_64& rng) {
  FlowGraph g;
  std::uniform_int_distribution<int> kind(0, 2), tok(0, 3);
  for (int i = 0; i < n; ++i) {
    const auto k = i == 0 ? NodeKind::kInstruction : static_cast<NodeKind>(kind(rng));
    g.nodes.push_back({i * 3 + 1, k, "t" + std::to_string(tok(rng))});
  }
  std::vector<int> ins, vals;
  for (const auto& nd : g.nodes) (nd.kind == NodeKind::kInstruction ? ins : vals).push_back(nd.id);
  std::uniform_int_distribution<int> rel(0, 2);
  for (int e = 0; e < n_edges; ++e) {
    auto r = static_cast<Relation>(rel(rng));
    if (r == Relation::kData && vals.empty()) r = Relation::kControl;
    auto pick = [&](const std::vector<int>& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };
    if (r == Relation::kData) {
      const bool into_instr = rel(rng) == 0;
      const int a = pick(ins), b = pick(vals);
      g.edges.push_back(into_instr ? Edge{b, a, r, 0} : Edge{a, b, r, 0});
    } else {
      g.edges.push_back({pick(ins), pick(ins), r, e % 2});
    }
  }
  return g;
}

namespace oracle {

// Scalar GRU-gated message passing over one relation, straight from the gate
// equations. W[i][j] style access through the parameter matrices only.
inline std::vector<std::vector<double>> ggnn(const nn::ParameterStore& p, const nn::GgnnLayout& l,
                                             const std::vector<nn::IndexEdge>& edges,
                                             std::vector<std::vector<double>> h, int steps) {
  const std::size_t n = h.size();
  const auto H = static_cast<std::size_t>(l.hidden);
  auto at = [&](std::size_t m, std::size_t i, std::size_t j) {
    return p[m](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  for (int t = 0; t < steps; ++t) {
    std::vector<std::vector<double>> m(n, std::vector<double>(H, 0.0)), next = h;
    for (const auto& e : edges)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < H; ++j) m[e.dst][i] += at(l.W, i, j) * h[e.src][j];
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<double> z(H), r(H);
      for (std::size_t i = 0; i < H; ++i) {
        double az = at(l.bz, i, 0), ar = at(l.br, i, 0);
        for (std::size_t j = 0; j < H; ++j) {
          az += at(l.Wz, i, j) * m[v][j] + at(l.Uz, i, j) * h[v][j];
          ar += at(l.Wr, i, j) * m[v][j] + at(l.Ur, i, j) * h[v][j];
        }
        z[i] = sig(az);
        r[i] = sig(ar);
      }
      for (std::size_t i = 0; i < H; ++i) {
        double ac = at(l.bh, i, 0);
        for (std::size_t j = 0; j < H; ++j) ac += at(l.Wh, i, j) * m[v][j] + at(l.Uh, i, j) * r[j] * h[v][j];
        next[v][i] = (1.0 - z[i]) * h[v][i] + z[i] * std::tanh(ac);
      }
    }
    h = std::move(next);
  }
  return h;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  // Textbook single-pass-free form: covariance over product of deviations.
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (x[i] - sx / n) * (y[i] - sy / n);
    vx += (x[i] - sx / n) * (x[i] - sx / n);
    vy += (y[i] - sy / n) * (y[i] - sy / n);
  }
  if (vx == 0 || vy == 0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

inline double geomean(const std::vector<double>& v) {
  using big = boost::multiprecision::cpp_bin_float_50;
  big sum = 0;
  for (double x : v) sum += boost::multiprecision::log(big(x));
  return static_cast<double>(boost::multiprecision::exp(sum / v.size()));
}

inline int argmin(const std::vector<double>& row) {
  int best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] < row[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

// Rule A written from its prose description, independent of synthetic.hpp:
// small/large by instruction count against the midpoint of the two size
// ranges; inputs below half of the input count are the low-miss ones, so the
// miss threshold sits half a growth step below input n/2; then
// small-low -> first, small-high -> one third, large-low -> two thirds,
// large-high -> last configuration.
inline int rule_a(int instructions, double l1_misses, int small_max, int large_min, int n_inputs, int n_configs) {
  const bool large = instructions * 2 > small_max + large_min;
  const bool high = l1_misses > 1000.0 * std::pow(1.25, (n_inputs / 2) - 0.5);
  const int last = n_configs - 1;
  if (!large && !high) return 0;
  if (large && high) return last;
  if (!large) return static_cast<int>(std::lround(last / 3.0));
  return static_cast<int>(std::lround(2.0 * last / 3.0));
}

// Worst relative error between analytic gradients and central differences
// at `coords` random scalar coordinates of `params`. `loss` re-evaluates the
// objective with the current parameter values.
template <typename Loss>
double gradient_check(nn::ParameterStore& params, const nn::Gradients& analytic, Loss&& loss, int coords,
                      std::mt19937_64& rng, double step = 1e-5) {
  std::vector<std::pair<std::size_t, Eigen::Index>> all;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (Eigen::Index k = 0; k < params[i].size(); ++k) all.emplace_back(i, k);
  std::shuffle(all.begin(), all.end(), rng);
  double worst = 0.0;
  for (int c = 0; c < coords && c < static_cast<int>(all.size()); ++c) {
    const auto [i, k] = all[static_cast<std::size_t>(c)];
    double& w = params[i].data()[k];
    const double saved = w;
    w = saved + step;
    const double up = loss();
    w = saved - step;
    const double down = loss();
    w = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[i].data()[k];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace oracle

// Writes a minimal manifest-based dataset. `vectors` maps kernel -> values,
// `runtimes` maps (kernel, input) -> per-config seconds keyed by config id.
struct DatasetFiles {
  std::map<std::string, FlowGraph> graphs;
  std::map<std::string, std::vector<double>> vectors;
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> runtimes;
  std::map<std::pair<std::string, std::string>, std::vector<double>> counters;  // default schema order
  std::string default_config;
  std::string task = "omp_threads";

  fs::path write(const fs::path& dir) const {
    nlohmann::json kernels = nlohmann::json::object();
    for (const auto& [kid, g] : graphs) {
      std::string content;
      for (const auto& n : g.nodes)
        content += nlohmann::json{{"type", "node"}, {"id", n.id}, {"kind", to_string(n.kind)}, {"token", n.token}}.dump() + "\n";
      for (const auto& e : g.edges)
        content += nlohmann::json{{"type", "edge"}, {"src", e.src}, {"dst", e.dst}, {"relation", to_string(e.relation)}, {"position", e.position}}.dump() + "\n";
      text::write_file(dir / "graphs" / (kid + ".jsonl"), content);
      kernels[kid] = {{"graph_path", "graphs/" + kid + ".jsonl"}};
    }
    std::size_t dim = vectors.empty() ? 0 : vectors.begin()->second.size();
    std::string vcsv = "kernel_id";
    for (std::size_t d = 0; d < dim; ++d) vcsv += ",v" + std::to_string(d);
    vcsv += "\n";
    for (const auto& [kid, v] : vectors) {
      vcsv += kid;
      for (double x : v) vcsv += "," + text::format_double(x);
      vcsv += "\n";
    }
    text::write_file(dir / "vectors.csv", vcsv);
    std::string rcsv = "kernel_id,input_id,config_id,runtime_seconds\n";
    for (const auto& [key, row] : runtimes)
      for (const auto& [cfg, t] : row) rcsv += key.first + "," + key.second + "," + cfg + "," + text::format_double(t) + "\n";
    text::write_file(dir / "runtimes.csv", rcsv);
    std::string ccsv = "kernel_id,input_id," + text::join(default_counter_schema(), ",") + "\n";
    for (const auto& [key, c] : counters) {
      ccsv += key.first + "," + key.second;
      for (double x : c) ccsv += "," + text::format_double(x);
      ccsv += "\n";
    }
    text::write_file(dir / "counters.csv", ccsv);
    nlohmann::json m = {{"task", task}, {"kernels", kernels}, {"vectors", "vectors.csv"}, {"counters", "counters.csv"}, {"runtimes", "runtimes.csv"}};
    if (!default_config.empty()) m["default_config"] = default_config;
    text::write_file(dir / "manifest.json", m.dump(2));
    return dir / "manifest.json";
  }
};

// Two kernels x `inputs` inputs, configs {1, 2}, complete files.
inline DatasetFiles small_dataset(int inputs = 3, std::size_t dim = 4) {
  DatasetFiles f;
  f.default_config = "2";
  for (std::string kid : {"appA.k0", "appB.k0"}) {
    FlowGraph g;
    g.nodes = {instr(0, "load"), instr(1, "add"), var(2), cnst(3, "1")};
    g.edges = {{0, 1, Relation::kControl, 0}, {2, 0, Relation::kData, 0}, {3, 1, Relation::kData, 1}};
    f.graphs[kid] = g;
    std::vector<double> v(dim);
    for (std::size_t d = 0; d < dim; ++d) v[d] = static_cast<double>(d) + (kid == "appA.k0" ? 0.5 : -0.5);
    f.vectors[kid] = v;
    for (int i = 0; i < inputs; ++i) {
      const std::string iid = "in" + std::to_string(i);
      f.runtimes[{kid, iid}] = {{"1", 1.0 + i}, {"2", 2.0 + 0.5 * i}};
      f.counters[{kid, iid}] = {100.0 * (i + 1), 50.0, 10.0, 1000.0, 20.0 + i};
    }
  }
  return f;
}

}  // namespace mga::testing
