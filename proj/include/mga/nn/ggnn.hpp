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

#include <array>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mga/dataset.hpp"
#include "mga/error.hpp"
#include "mga/nn/params.hpp"

namespace mga::nn {

// Edge between dense node positions (row indices of the state matrix).
struct IndexEdge {
  int src = 0;
  int dst = 0;
};

// Parameter indices of one relation's gated graph layer. Message weight W
// feeds a GRU cell (update z, reset r, candidate h) shared across steps.
struct GgnnLayout {
  std::size_t W, Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
  Eigen::Index hidden = 0;
};

inline GgnnLayout add_ggnn(ParameterStore& store, const std::string& prefix, Eigen::Index hidden) {
  GgnnLayout l;
  l.hidden = hidden;
  l.W = store.add(prefix + ".message", hidden, hidden);
  l.Wz = store.add(prefix + ".update_in", hidden, hidden);
  l.Uz = store.add(prefix + ".update_state", hidden, hidden);
  l.bz = store.add(prefix + ".update_bias", hidden, 1);
  l.Wr = store.add(prefix + ".reset_in", hidden, hidden);
  l.Ur = store.add(prefix + ".reset_state", hidden, hidden);
  l.br = store.add(prefix + ".reset_bias", hidden, 1);
  l.Wh = store.add(prefix + ".candidate_in", hidden, hidden);
  l.Uh = store.add(prefix + ".candidate_state", hidden, hidden);
  l.bh = store.add(prefix + ".candidate_bias", hidden, 1);
  return l;
}

inline void init_ggnn(ParameterStore& store, const GgnnLayout& l, std::mt19937_64& rng) {
  for (auto i : {l.W, l.Wz, l.Uz, l.Wr, l.Ur, l.Wh, l.Uh}) glorot_uniform(store[i], rng);
  for (auto i : {l.bz, l.br, l.bh}) store[i].setZero();
}

struct GgnnStep {
  Matrix input;      // h
  Matrix message;    // m
  Matrix update;     // z
  Matrix reset;      // r
  Matrix candidate;  // h~
};

struct GgnnCache {
  std::vector<GgnnStep> steps;
};

// Sum of W * h_u over in-edges u -> v, one row per node.
inline Matrix aggregate_messages(const Matrix& W, std::span<const IndexEdge> edges, const Matrix& states) {
  const Matrix projected = states * W.transpose();
  Matrix m = Matrix::Zero(states.rows(), states.cols());
  for (const auto& e : edges) m.row(e.dst) += projected.row(e.src);
  return m;
}

// Runs `steps` rounds of message passing over one relation:
//   m_v = sum_{u->v} W h_u
//   z = s(Wz m + Uz h + bz),  r = s(Wr m + Ur h + br)
//   h~ = tanh(Wh m + Uh (r * h) + bh),  h' = (1 - z) * h + z * h~
inline Matrix ggnn_forward(const ParameterStore& p, const GgnnLayout& l, std::span<const IndexEdge> edges,
                           const Matrix& states, int steps, GgnnCache* cache = nullptr) {
  if (states.cols() != l.hidden)
    throw Error(ErrorKind::kShape, "node states have width " + std::to_string(states.cols()) +
                                       ", layer expects " + std::to_string(l.hidden));
  for (const auto& e : edges)
    if (e.src < 0 || e.dst < 0 || e.src >= states.rows() || e.dst >= states.rows())
      throw Error(ErrorKind::kShape, "edge references node outside the state matrix");
  if (cache) cache->steps.clear();
  Matrix h = states;
  for (int t = 0; t < steps; ++t) {
    Matrix m = aggregate_messages(p[l.W], edges, h);
    Matrix z = m * p[l.Wz].transpose() + h * p[l.Uz].transpose();
    z.rowwise() += p[l.bz].col(0).transpose();
    z = sigmoid(z);
    Matrix r = m * p[l.Wr].transpose() + h * p[l.Ur].transpose();
    r.rowwise() += p[l.br].col(0).transpose();
    r = sigmoid(r);
    Matrix c = m * p[l.Wh].transpose() + r.cwiseProduct(h) * p[l.Uh].transpose();
    c.rowwise() += p[l.bh].col(0).transpose();
    c = c.array().tanh().matrix();
    Matrix next = (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(c);
    if (cache) cache->steps.push_back({std::move(h), std::move(m), std::move(z), std::move(r), std::move(c)});
    h = std::move(next);
  }
  return h;
}

// Accumulates parameter gradients into `grads` and returns d(loss)/d(states).
inline Matrix ggnn_backward(const ParameterStore& p, const GgnnLayout& l, std::span<const IndexEdge> edges,
                            const GgnnCache& cache, const Matrix& d_out, Gradients& grads) {
  Matrix dh_next = d_out;
  for (auto it = cache.steps.rbegin(); it != cache.steps.rend(); ++it) {
    const auto& s = *it;
    const Matrix& h = s.input;
    Matrix dz = dh_next.cwiseProduct(s.candidate - h);
    Matrix dc = dh_next.cwiseProduct(s.update);
    Matrix dh = dh_next.cwiseProduct((1.0 - s.update.array()).matrix());

    const Matrix ac = dc.cwiseProduct((1.0 - s.candidate.array().square()).matrix());
    const Matrix rh = s.reset.cwiseProduct(h);
    grads[l.Wh] += ac.transpose() * s.message;
    grads[l.Uh] += ac.transpose() * rh;
    grads[l.bh] += ac.colwise().sum().transpose();
    Matrix dm = ac * p[l.Wh];
    const Matrix drh = ac * p[l.Uh];
    const Matrix dr = drh.cwiseProduct(h);
    dh += drh.cwiseProduct(s.reset);

    const Matrix ar = dr.cwiseProduct(s.reset.cwiseProduct((1.0 - s.reset.array()).matrix()));
    grads[l.Wr] += ar.transpose() * s.message;
    grads[l.Ur] += ar.transpose() * h;
    grads[l.br] += ar.colwise().sum().transpose();
    dm += ar * p[l.Wr];
    dh += ar * p[l.Ur];

    const Matrix az = dz.cwiseProduct(s.update.cwiseProduct((1.0 - s.update.array()).matrix()));
    grads[l.Wz] += az.transpose() * s.message;
    grads[l.Uz] += az.transpose() * h;
    grads[l.bz] += az.colwise().sum().transpose();
    dm += az * p[l.Wz];
    dh += az * p[l.Uz];

    // m = A (h W^T): route dm back along edges, then through W.
    Matrix dproj = Matrix::Zero(h.rows(), h.cols());
    for (const auto& e : edges) dproj.row(e.src) += dm.row(e.dst);
    grads[l.W] += dproj.transpose() * h;
    dh += dproj * p[l.W];
    dh_next = std::move(dh);
  }
  return dh_next;
}

// ---------------------------------------------------------------------------
// Heterogeneous graph network
// ---------------------------------------------------------------------------

using RelationEdges = std::map<Relation, std::vector<IndexEdge>>;

// Maps node ids of a split graph onto dense positions.
inline RelationEdges to_index_edges(const RelationSubgraphs& sub) {
  std::map<int, int> pos;
  for (std::size_t i = 0; i < sub.node_ids.size(); ++i) pos[sub.node_ids[i]] = static_cast<int>(i);
  RelationEdges out;
  for (const auto& [rel, edges] : sub.edges) {
    auto& dst = out[rel];
    dst.reserve(edges.size());
    for (const auto& e : edges) dst.push_back({pos.at(e.src), pos.at(e.dst)});
  }
  return out;
}

struct HeteroCache {
  std::array<GgnnCache, 3> relations;
  Eigen::Index num_nodes = 0;
};

struct HeteroOutput {
  Matrix node_states;  // per-node mean over relations
  Vector readout;      // mean over nodes
};

inline const std::vector<IndexEdge>& relation_edges(const RelationEdges& edges, Relation r) {
  const auto it = edges.find(r);
  if (it == edges.end())
    throw Error(ErrorKind::kContract, "relation '" + std::string(to_string(r)) + "' missing from subgraph map");
  return it->second;
}

// Every relation's network starts from the same initial states; node states
// are averaged across relations and the graph embedding is the node mean.
inline HeteroOutput hetero_forward(const ParameterStore& p, const std::array<GgnnLayout, 3>& layers,
                                   const RelationEdges& edges, const Matrix& initial, int steps,
                                   HeteroCache* cache = nullptr) {
  if (initial.rows() == 0) throw Error(ErrorKind::kShape, "graph has no nodes");
  HeteroOutput out;
  out.node_states = Matrix::Zero(initial.rows(), initial.cols());
  for (std::size_t r = 0; r < kRelations.size(); ++r) {
    const auto& e = relation_edges(edges, kRelations[r]);
    out.node_states += ggnn_forward(p, layers[r], e, initial, steps, cache ? &cache->relations[r] : nullptr);
  }
  out.node_states /= static_cast<double>(kRelations.size());
  out.readout = out.node_states.colwise().mean().transpose();
  if (cache) cache->num_nodes = initial.rows();
  return out;
}

// Backpropagates a readout gradient; returns d(loss)/d(initial states).
inline Matrix hetero_backward(const ParameterStore& p, const std::array<GgnnLayout, 3>& layers,
                              const RelationEdges& edges, const HeteroCache& cache, const Vector& d_readout,
                              Gradients& grads) {
  const double scale = 1.0 / (static_cast<double>(cache.num_nodes) * static_cast<double>(kRelations.size()));
  const Matrix d_rel = Matrix::Ones(cache.num_nodes, 1) * (d_readout.transpose() * scale);
  Matrix d_init = Matrix::Zero(cache.num_nodes, d_readout.size());
  for (std::size_t r = 0; r < kRelations.size(); ++r)
    d_init += ggnn_backward(p, layers[r], relation_edges(edges, kRelations[r]), cache.relations[r], d_rel, grads);
  return d_init;
}

// ---------------------------------------------------------------------------
// Node vocabulary
// ---------------------------------------------------------------------------

// Embedding rows keyed by (node kind, token). Rows 0..2 are the
// out-of-vocabulary buckets for instruction, variable and constant nodes.
class Vocabulary {
 public:
  Vocabulary() = default;

  template <typename Graphs>
  static Vocabulary build(const Graphs& graphs) {
    std::set<std::pair<int, std::string>> keys;
    for (const FlowGraph& g : graphs)
      for (const auto& n : g.nodes) keys.emplace(static_cast<int>(n.kind), n.token);
    Vocabulary v;
    int row = static_cast<int>(kNumNodeKinds);
    for (const auto& k : keys) v.rows_.emplace(k, row++);
    return v;
  }

  std::size_t size() const { return kNumNodeKinds + rows_.size(); }

  int row(NodeKind kind, const std::string& token) const {
    const auto it = rows_.find({static_cast<int>(kind), token});
    return it == rows_.end() ? static_cast<int>(kind) : it->second;
  }

  std::vector<int> rows(const FlowGraph& g) const {
    std::vector<int> out;
    out.reserve(g.nodes.size());
    for (const auto& n : g.nodes) out.push_back(row(n.kind, n.token));
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [k, r] : rows_)
      arr.push_back({{"kind", to_string(static_cast<NodeKind>(k.first))}, {"token", k.second}, {"row", r}});
    return arr;
  }

  static Vocabulary from_json(const nlohmann::json& arr) {
    Vocabulary v;
    for (const auto& e : arr) {
      const auto kind = parse_node_kind(e.at("kind").get<std::string>());
      if (!kind) throw Error(ErrorKind::kFormat, "vocabulary entry with unknown node kind");
      v.rows_.emplace(std::make_pair(static_cast<int>(*kind), e.at("token").get<std::string>()),
                      e.at("row").get<int>());
    }
    return v;
  }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::map<std::pair<int, std::string>, int> rows_;
};

// A flow graph lowered for the network: dense edges per relation plus the
// embedding row of every node.
struct CompiledGraph {
  RelationEdges edges;
  std::vector<int> embedding_rows;
};

inline CompiledGraph compile_graph(const FlowGraph& g, const Vocabulary& vocab) {
  return {to_index_edges(split_by_relation(g)), vocab.rows(g)};
}

}  // namespace mga::nn
