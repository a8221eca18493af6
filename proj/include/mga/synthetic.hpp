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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "mga/dataset.hpp"
#include "mga/dataset_io.hpp"
#include "mga/error.hpp"
#include "mga/text.hpp"

namespace mga::synthetic {

// Desk-scale dataset with a planted decision rule.
//
// Rule "A": kernels are either small or large (instruction-node count below
// or above the midpoint between the two size ranges) and each input either
// stresses L1 or not (default-config l1_cache_misses below or above a fixed
// threshold). The best configuration is looked up in a 2x2 table,
//
//                  low misses          high misses
//   small graph    config[0]           config[round((K-1)/3)]
//   large graph    config[round(2(K-1)/3)]  config[K-1]
//
// and every other configuration is at least 30% slower.
struct Spec {
  std::size_t n_kernels = 40;
  std::size_t n_inputs = 10;
  std::vector<std::string> configs = {"1", "2", "4", "8"};  // thread counts; the last is the default
  std::uint64_t seed = 7;
  int small_min = 4, small_max = 10;   // instruction nodes of small kernels
  int large_min = 16, large_max = 28;  // instruction nodes of large kernels
  std::size_t vector_dim = 300;
  std::string rule = "A";
  std::size_t kernels_per_application = 2;

  void validate() const {
    if (configs.empty()) throw Error(ErrorKind::kGeneration, "config space is empty");
    if (n_kernels < 1 || n_inputs < 1 || vector_dim < 1 || kernels_per_application < 1)
      throw Error(ErrorKind::kGeneration, "counts must be at least 1");
    if (small_min < 1 || small_min > small_max || small_max >= large_min || large_min > large_max)
      throw Error(ErrorKind::kGeneration, "size ranges must be ordered: 1 <= small_min <= small_max < large_min <= large_max");
    if (rule != "A") throw Error(ErrorKind::kGeneration, "unknown rule '" + rule + "'");
  }
};

inline constexpr double kL1Base = 1000.0;
inline constexpr double kL1Growth = 1.25;

inline double graph_threshold(const Spec& s) { return 0.5 * (s.small_max + s.large_min); }

// Geometric midpoint between the last low-miss and first high-miss input.
inline double l1_threshold(const Spec& s) {
  const double h = static_cast<double>(s.n_inputs / 2);
  return kL1Base * std::pow(kL1Growth, h - 0.5);
}

inline std::vector<std::vector<int>> rule_table(std::size_t num_configs) {
  std::vector<std::vector<int>> t(2, std::vector<int>(2));
  const double span = static_cast<double>(num_configs - 1);
  for (int g = 0; g < 2; ++g)
    for (int m = 0; m < 2; ++m) t[g][m] = static_cast<int>(std::lround((2 * g + m) * span / 3.0));
  return t;
}

inline int oracle_rule(const Spec& spec, std::size_t instruction_count, const std::map<std::string, double>& counters) {
  if (spec.rule != "A") throw Error(ErrorKind::kGeneration, "unknown rule '" + spec.rule + "'");
  if (spec.configs.empty()) throw Error(ErrorKind::kGeneration, "config space is empty");
  const auto it = counters.find("l1_cache_misses");
  if (it == counters.end()) throw Error(ErrorKind::kSchema, "rule A needs l1_cache_misses");
  const int g = static_cast<double>(instruction_count) >= graph_threshold(spec) ? 1 : 0;
  const int m = it->second >= l1_threshold(spec) ? 1 : 0;
  return rule_table(spec.configs.size())[static_cast<std::size_t>(g)][static_cast<std::size_t>(m)];
}

// Generated artifacts keyed by path relative to the output directory.
using Files = std::map<std::string, std::string>;

namespace detail {

inline std::string zero_pad(std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, v);
  return buf;
}

inline FlowGraph make_graph(int n_instr, bool large, std::mt19937_64& rng) {
  static const std::vector<std::string> small_tokens = {"load", "store", "add", "icmp", "br", "ret", "call"};
  static const std::vector<double> small_weights = {3, 2, 3, 2, 2, 1, 1};
  static const std::vector<std::string> large_tokens = {"load", "store", "fadd", "fmul", "getelementptr",
                                                        "phi",  "icmp",  "br",   "call"};
  static const std::vector<double> large_weights = {3, 2, 3, 3, 3, 2, 1, 2, 1};
  const auto& tokens = large ? large_tokens : small_tokens;
  const auto& weights = large ? large_weights : small_weights;
  std::discrete_distribution<std::size_t> pick_token(weights.begin(), weights.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick_instr = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  FlowGraph g;
  for (int i = 0; i < n_instr; ++i) g.nodes.push_back({i, NodeKind::kInstruction, tokens[pick_token(rng)]});
  std::map<int, int> out_degree;
  auto add_edge = [&](int s, int d, Relation r) { g.edges.push_back({s, d, r, out_degree[s * 4 + static_cast<int>(r)]++}); };

  for (int i = 0; i + 1 < n_instr; ++i) {
    add_edge(i, i + 1, Relation::kControl);
    if (i + 2 < n_instr && unit(rng) < 0.2) add_edge(i, pick_instr(i + 2, n_instr - 1), Relation::kControl);
  }
  int next_id = n_instr;
  const int n_var = std::max(1, n_instr / 3);
  static const std::vector<std::string> var_types = {"i32", "i64", "double", "ptr"};
  for (int v = 0; v < n_var; ++v) {
    const int id = next_id++;
    g.nodes.push_back({id, NodeKind::kVariable, var_types[std::uniform_int_distribution<std::size_t>(0, 3)(rng)]});
    add_edge(pick_instr(0, n_instr - 1), id, Relation::kData);
    const int uses = 1 + static_cast<int>(unit(rng) < 0.5);
    for (int u = 0; u < uses; ++u) add_edge(id, pick_instr(0, n_instr - 1), Relation::kData);
  }
  const int n_const = 1 + n_instr / 6;
  static const std::vector<std::string> const_types = {"i32", "double"};
  for (int c = 0; c < n_const; ++c) {
    const int id = next_id++;
    g.nodes.push_back({id, NodeKind::kConstant, const_types[std::uniform_int_distribution<std::size_t>(0, 1)(rng)]});
    add_edge(id, pick_instr(0, n_instr - 1), Relation::kData);
  }
  for (int i = 0; i < n_instr; ++i)
    if (g.nodes[static_cast<std::size_t>(i)].token == "call" && i != 0) add_edge(i, 0, Relation::kCall);
  return g;
}

}  // namespace detail

inline Files generate(const Spec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t K = spec.configs.size();
  const int default_config = static_cast<int>(K - 1);

  std::vector<std::vector<double>> centers(2, std::vector<double>(spec.vector_dim));
  for (auto& c : centers)
    for (auto& x : c) x = normal(rng);

  std::vector<int> buckets(spec.n_kernels);
  for (std::size_t k = 0; k < spec.n_kernels; ++k) buckets[k] = static_cast<int>(k % 2);
  std::shuffle(buckets.begin(), buckets.end(), rng);

  Files files;
  nlohmann::json kernels = nlohmann::json::object();
  std::vector<std::pair<std::string, std::vector<double>>> vectors;
  std::string counters = "kernel_id,input_id,config_id";
  for (const auto& n : default_counter_schema()) counters += "," + n;
  counters += "\n";
  std::string runtimes = "kernel_id,input_id,config_id,runtime_seconds\n";
  nlohmann::json labels = nlohmann::json::object();

  const int app_width = spec.n_kernels / spec.kernels_per_application >= 100 ? 4 : 2;
  for (std::size_t k = 0; k < spec.n_kernels; ++k) {
    const std::string app = "app" + detail::zero_pad(k / spec.kernels_per_application, app_width);
    const std::string kid = app + ".k" + std::to_string(k % spec.kernels_per_application);
    const bool large = buckets[k] == 1;
    const int n_instr = large ? std::uniform_int_distribution<int>(spec.large_min, spec.large_max)(rng)
                              : std::uniform_int_distribution<int>(spec.small_min, spec.small_max)(rng);
    const auto graph = detail::make_graph(n_instr, large, rng);
    const std::string graph_path = "graphs/" + kid + ".jsonl";
    files[graph_path] = to_jsonl(graph);
    kernels[kid] = {{"graph_path", graph_path}, {"vector_row", kid}, {"application_id", app}};

    std::vector<double> v(spec.vector_dim);
    for (std::size_t d = 0; d < spec.vector_dim; ++d) v[d] = centers[static_cast<std::size_t>(buckets[k])][d] + 0.3 * normal(rng);
    vectors.emplace_back(kid, std::move(v));

    for (std::size_t i = 0; i < spec.n_inputs; ++i) {
      const std::string iid = "in" + detail::zero_pad(i, 2);
      std::map<std::string, double> c;
      c["l1_cache_misses"] = kL1Base * std::pow(kL1Growth, static_cast<double>(i)) * uniform(0.95, 1.05);
      c["l2_cache_misses"] = c["l1_cache_misses"] * uniform(0.2, 0.4);
      c["l3_load_misses"] = c["l2_cache_misses"] * uniform(0.1, 0.3);
      c["branch_instructions_retired"] = n_instr * 1e4 * static_cast<double>(i + 1) * uniform(0.9, 1.1);
      c["branch_mispredictions"] = c["branch_instructions_retired"] * uniform(0.01, 0.05);
      const int best = oracle_rule(spec, static_cast<std::size_t>(n_instr), c);
      labels[kid + "/" + iid] = spec.configs[static_cast<std::size_t>(best)];

      const double base = 1e-3 * n_instr * static_cast<double>(i + 1) * uniform(0.9, 1.1);
      for (std::size_t cfg = 0; cfg < K; ++cfg) {
        const double jitter = static_cast<int>(cfg) == default_config ? 1.0 : uniform(0.8, 1.2);
        counters += kid + "," + iid + "," + spec.configs[cfg];
        for (const auto& n : default_counter_schema()) counters += "," + text::format_double(c.at(n) * jitter);
        counters += "\n";
        const double rt = static_cast<int>(cfg) == best ? base : base * uniform(1.3, 2.0);
        runtimes += kid + "," + iid + "," + spec.configs[cfg] + "," + text::format_double(rt) + "\n";
      }
    }
  }
  files["vectors.csv"] = to_csv(vectors);
  files["counters.csv"] = counters;
  files["runtimes.csv"] = runtimes;

  nlohmann::json manifest = {{"task", "omp_threads"},
                             {"kernels", kernels},
                             {"vectors", "vectors.csv"},
                             {"counters", "counters.csv"},
                             {"runtimes", "runtimes.csv"},
                             {"aux_features", default_counter_schema()},
                             {"default_config", spec.configs.back()},
                             {"config_space", {{"dimensions", {{{"name", "threads"}, {"values", spec.configs}}}}}}};
  files["manifest.json"] = manifest.dump(2) + "\n";

  nlohmann::json truth = {{"rule", spec.rule},
                          {"seed", spec.seed},
                          {"graph_feature", "instruction node count"},
                          {"graph_threshold", graph_threshold(spec)},
                          {"counter_feature", "l1_cache_misses"},
                          {"counter_threshold", l1_threshold(spec)},
                          {"configs", spec.configs},
                          {"table", rule_table(K)},
                          {"labels", labels}};
  files["ground_truth.json"] = truth.dump(2) + "\n";
  return files;
}

inline void write(const Files& files, const std::filesystem::path& out_dir) {
  for (const auto& [rel, content] : files) text::write_file(out_dir / rel, content);
}

}  // namespace mga::synthetic
