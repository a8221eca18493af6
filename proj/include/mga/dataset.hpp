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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mga/error.hpp"
#include "mga/text.hpp"

namespace mga {

// ---------------------------------------------------------------------------
// Flow multigraph
// ---------------------------------------------------------------------------

enum class NodeKind { kInstruction = 0, kVariable = 1, kConstant = 2 };
enum class Relation { kControl = 0, kData = 1, kCall = 2 };

inline constexpr std::array<Relation, 3> kRelations = {Relation::kControl, Relation::kData,
                                                       Relation::kCall};
inline constexpr std::size_t kNumNodeKinds = 3;

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::kInstruction: return "instruction";
    case NodeKind::kVariable: return "variable";
    case NodeKind::kConstant: return "constant";
  }
  return "?";
}

inline std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::kControl: return "control";
    case Relation::kData: return "data";
    case Relation::kCall: return "call";
  }
  return "?";
}

inline std::optional<NodeKind> parse_node_kind(std::string_view s) {
  if (s == "instruction") return NodeKind::kInstruction;
  if (s == "variable") return NodeKind::kVariable;
  if (s == "constant") return NodeKind::kConstant;
  return std::nullopt;
}

inline std::optional<Relation> parse_relation(std::string_view s) {
  if (s == "control") return Relation::kControl;
  if (s == "data") return Relation::kData;
  if (s == "call") return Relation::kCall;
  return std::nullopt;
}

struct Node {
  int id = 0;
  NodeKind kind = NodeKind::kInstruction;
  std::string token;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  int src = 0;
  int dst = 0;
  Relation relation = Relation::kControl;
  // Operand position. Carried through ingestion, not used by message passing.
  int position = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge& a, const Edge& b) {
    return std::tie(a.src, a.dst, a.relation, a.position) <=>
           std::tie(b.src, b.dst, b.relation, b.position);
  }
};

struct FlowGraph {
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  std::size_t count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [kind](const Node& n) { return n.kind == kind; }));
  }

  friend bool operator==(const FlowGraph&, const FlowGraph&) = default;
};

// Returns every violated invariant; an empty list means the graph is valid.
inline std::vector<std::string> validate_graph(const FlowGraph& g) {
  std::vector<std::string> violations;
  std::map<int, NodeKind> kinds;
  for (const auto& n : g.nodes) {
    if (!kinds.emplace(n.id, n.kind).second)
      violations.push_back("duplicate node id " + std::to_string(n.id));
  }
  if (g.count(NodeKind::kInstruction) == 0) violations.emplace_back("no instruction node");

  for (const auto& e : g.edges) {
    const std::string where = "edge (" + std::to_string(e.src) + "->" + std::to_string(e.dst) + ", " +
                              std::string(to_string(e.relation)) + ")";
    const auto s = kinds.find(e.src);
    const auto d = kinds.find(e.dst);
    if (s == kinds.end() || d == kinds.end()) {
      violations.push_back("dangling endpoint in " + where);
      continue;
    }
    const bool s_instr = s->second == NodeKind::kInstruction;
    const bool d_instr = d->second == NodeKind::kInstruction;
    if (e.position < 0) violations.push_back("negative position in " + where);
    switch (e.relation) {
      case Relation::kControl:
        if (!s_instr || !d_instr)
          violations.push_back("control edge endpoints must be instructions: " + where);
        break;
      case Relation::kCall:
        if (!s_instr || !d_instr)
          violations.push_back("call edge endpoints must be instructions: " + where);
        break;
      case Relation::kData:
        if (s_instr == d_instr)
          violations.push_back("data edge must join an instruction and a variable/constant: " + where);
        break;
    }
  }
  return violations;
}

inline void require_valid(const FlowGraph& g, std::string_view what = "graph") {
  const auto violations = validate_graph(g);
  if (!violations.empty())
    throw Error(ErrorKind::kValidation,
                std::string(what) + " is invalid: " + text::join(violations, "; "));
}

// One edge list per relation; every list shares the full node set of the
// source graph, so relations without edges still update all nodes.
struct RelationSubgraphs {
  std::vector<int> node_ids;
  std::map<Relation, std::vector<Edge>> edges;
};

inline RelationSubgraphs split_by_relation(const FlowGraph& g) {
  require_valid(g);
  RelationSubgraphs out;
  out.node_ids.reserve(g.nodes.size());
  for (const auto& n : g.nodes) out.node_ids.push_back(n.id);
  for (auto r : kRelations) out.edges[r];
  for (const auto& e : g.edges) out.edges[e.relation].push_back(e);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration space
// ---------------------------------------------------------------------------

struct ConfigDimension {
  std::string name;
  std::vector<std::string> values;

  friend bool operator==(const ConfigDimension&, const ConfigDimension&) = default;
};

// Dense enumeration of runtime configurations. Cartesian spaces enumerate
// with the first dimension varying slowest; ids join values with ':'.
class ConfigSpace {
 public:
  ConfigSpace() = default;

  static ConfigSpace cartesian(std::vector<ConfigDimension> dims) {
    if (dims.empty()) throw Error(ErrorKind::kSchema, "config space needs at least one dimension");
    for (const auto& d : dims)
      if (d.values.empty())
        throw Error(ErrorKind::kSchema, "config dimension '" + d.name + "' has no values");
    ConfigSpace cs;
    cs.dims_ = std::move(dims);
    std::vector<std::size_t> idx(cs.dims_.size(), 0);
    while (true) {
      std::vector<std::string> parts;
      for (std::size_t d = 0; d < idx.size(); ++d) parts.push_back(cs.dims_[d].values[idx[d]]);
      cs.ids_.push_back(text::join(parts, ":"));
      std::size_t d = idx.size();
      while (d > 0) {
        --d;
        if (++idx[d] < cs.dims_[d].values.size()) break;
        idx[d] = 0;
        if (d == 0) {
          cs.check_unique();
          return cs;
        }
      }
    }
  }

  // Data-driven space: numeric ids sort numerically, otherwise lexicographically.
  static ConfigSpace from_ids(std::vector<std::string> ids, std::string dim_name = "config") {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const bool numeric = std::all_of(ids.begin(), ids.end(), [](const std::string& s) {
      double v;
      return text::parse_double(s, v);
    });
    if (numeric) {
      std::stable_sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
        double x = 0, y = 0;
        text::parse_double(a, x);
        text::parse_double(b, y);
        return x < y;
      });
    }
    return cartesian({ConfigDimension{std::move(dim_name), std::move(ids)}});
  }

  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t index) const { return ids_.at(index); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<ConfigDimension>& dimensions() const { return dims_; }

  std::optional<int> index_of(std::string_view id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i)
      if (ids_[i] == id) return static_cast<int>(i);
    return std::nullopt;
  }

  friend bool operator==(const ConfigSpace&, const ConfigSpace&) = default;

 private:
  void check_unique() const {
    std::set<std::string> seen(ids_.begin(), ids_.end());
    if (seen.size() != ids_.size())
      throw Error(ErrorKind::kSchema, "config space enumerates duplicate configurations");
  }

  std::vector<ConfigDimension> dims_;
  std::vector<std::string> ids_;
};

// The joint thread/schedule/chunk space used for OpenMP loop tuning.
inline ConfigSpace omp_thread_schedule_chunk_space() {
  return ConfigSpace::cartesian({
      {"threads", {"1", "2", "4", "8", "12", "16", "20"}},
      {"schedule", {"static", "dynamic", "guided"}},
      {"chunk", {"1", "8", "32", "64", "128", "256", "512"}},
  });
}

// ---------------------------------------------------------------------------
// Runtimes and labels
// ---------------------------------------------------------------------------

// Runtime in seconds per config index; nullopt where not measured.
using RuntimeRow = std::vector<std::optional<double>>;

// Argmin of the measured runtimes; ties go to the smallest config index.
inline int oracle_label(const RuntimeRow& row) {
  int best = -1;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!row[i]) continue;
    if (!(*row[i] > 0.0) || !std::isfinite(*row[i]))
      throw Error(ErrorKind::kLabeling, "runtime for config " + std::to_string(i) + " is not positive");
    if (best < 0 || *row[i] < *row[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  if (best < 0) throw Error(ErrorKind::kLabeling, "empty runtime row");
  return best;
}

// ---------------------------------------------------------------------------
// Joined dataset
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& default_counter_schema() {
  static const std::vector<std::string> schema = {
      "l1_cache_misses", "l2_cache_misses", "l3_load_misses", "branch_instructions_retired",
      "branch_mispredictions"};
  return schema;
}

inline const std::vector<std::string>& device_mapping_schema() {
  static const std::vector<std::string> schema = {"transfer_size", "workgroup_size"};
  return schema;
}

struct Sample {
  std::string kernel_id;
  std::string input_id;
  std::string application_id;
  std::size_t kernel = 0;  // index into Dataset::kernels
  std::vector<double> aux;
  int label = -1;  // -1 when no runtimes are known
  RuntimeRow runtimes;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Kernel {
  std::string id;
  std::string application_id;
  FlowGraph graph;
  std::vector<double> vector;

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

struct Dataset {
  ConfigSpace configs;
  std::optional<int> default_config;
  std::vector<std::string> aux_names;
  std::vector<Kernel> kernels;  // sorted by id
  std::vector<Sample> samples;  // sorted by (kernel_id, input_id)

  std::size_t vector_dim() const { return kernels.empty() ? 0 : kernels.front().vector.size(); }
  const Kernel& kernel_of(const Sample& s) const { return kernels.at(s.kernel); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace mga
