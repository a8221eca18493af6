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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mga/dataset.hpp"
#include "mga/error.hpp"
#include "mga/nn/dae.hpp"
#include "mga/nn/fusion.hpp"
#include "mga/nn/ggnn.hpp"
#include "mga/nn/params.hpp"
#include "mga/preprocess.hpp"
#include "mga/text.hpp"

namespace mga {

using nn::CompiledGraph;
using nn::Gradients;
using nn::ParameterStore;

enum class DaeFeature { kCode, kReconstruction };

struct Hyperparams {
  int hidden = 64;         // node state width
  int code = 32;           // autoencoder bottleneck
  int dae_hidden = 128;    // autoencoder outer hidden layers
  int fusion_hidden = 64;  // classifier hidden layer
  int steps = 2;           // message-passing rounds
  double learning_rate = 1e-3;
  double weight_decay = 1e-2;
  int epochs = 200;
  int batch_size = 0;  // 0: whole training split per step
  double embedding_scale = 1.0;
  int dae_epochs = 200;
  double dae_learning_rate = 1e-3;
  double dae_weight_decay = 0.0;
  double swap_rate = 0.10;
  double gauss_rank_epsilon = 1e-6;
  bool use_graph = true;
  bool use_vector = true;
  bool use_aux = true;
  DaeFeature dae_feature = DaeFeature::kCode;
  bool allow_empty_classes = false;

  nlohmann::json to_json() const {
    return {{"hidden", hidden},
            {"code", code},
            {"dae_hidden", dae_hidden},
            {"fusion_hidden", fusion_hidden},
            {"steps", steps},
            {"learning_rate", learning_rate},
            {"weight_decay", weight_decay},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"embedding_scale", embedding_scale},
            {"dae_epochs", dae_epochs},
            {"dae_learning_rate", dae_learning_rate},
            {"dae_weight_decay", dae_weight_decay},
            {"swap_rate", swap_rate},
            {"gauss_rank_epsilon", gauss_rank_epsilon},
            {"use_graph", use_graph},
            {"use_vector", use_vector},
            {"use_aux", use_aux},
            {"dae_feature", dae_feature == DaeFeature::kCode ? "code" : "reconstruction"},
            {"allow_empty_classes", allow_empty_classes}};
  }

  // Keys absent from `j` keep their current values; unknown keys are rejected.
  void update_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "hidden", "code", "dae_hidden", "fusion_hidden", "steps", "learning_rate", "weight_decay",
        "epochs", "batch_size", "embedding_scale", "dae_epochs", "dae_learning_rate", "dae_weight_decay",
        "swap_rate", "gauss_rank_epsilon", "use_graph", "use_vector", "use_aux", "dae_feature",
        "allow_empty_classes"};
    try {
      for (const auto& [k, _] : j.items())
        if (!known.count(k)) throw Error(ErrorKind::kFormat, "unknown hyperparameter '" + k + "'");
      auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
      };
      get("hidden", hidden);
      get("code", code);
      get("dae_hidden", dae_hidden);
      get("fusion_hidden", fusion_hidden);
      get("steps", steps);
      get("learning_rate", learning_rate);
      get("weight_decay", weight_decay);
      get("epochs", epochs);
      get("batch_size", batch_size);
      get("embedding_scale", embedding_scale);
      get("dae_epochs", dae_epochs);
      get("dae_learning_rate", dae_learning_rate);
      get("dae_weight_decay", dae_weight_decay);
      get("swap_rate", swap_rate);
      get("gauss_rank_epsilon", gauss_rank_epsilon);
      get("use_graph", use_graph);
      get("use_vector", use_vector);
      get("use_aux", use_aux);
      get("allow_empty_classes", allow_empty_classes);
      if (j.contains("dae_feature")) {
        const auto f = j.at("dae_feature").get<std::string>();
        if (f == "code") dae_feature = DaeFeature::kCode;
        else if (f == "reconstruction") dae_feature = DaeFeature::kReconstruction;
        else throw Error(ErrorKind::kFormat, "dae_feature must be 'code' or 'reconstruction'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, std::string("hyperparameters: ") + e.what());
    }
  }

  static Hyperparams from_json(const nlohmann::json& j) {
    Hyperparams hp;
    hp.update_from_json(j);
    return hp;
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

// ---------------------------------------------------------------------------
// Stage-two network: node embeddings, three relation GGNNs, fusion head.
// ---------------------------------------------------------------------------

struct Network {
  ParameterStore params;
  std::size_t embedding = 0;
  std::array<nn::GgnnLayout, 3> relations{};
  nn::FusionLayout fusion;
  int steps = 2;
  Eigen::Index hidden = 0, code_width = 0, aux_width = 0;
  bool use_graph = true;

  Network() = default;

  Network(std::size_t vocab_size, Eigen::Index hidden_width, Eigen::Index code_w, Eigen::Index aux_w,
          Eigen::Index fusion_hidden, Eigen::Index classes, int num_steps, bool graph)
      : steps(num_steps), hidden(graph ? hidden_width : 0), code_width(code_w), aux_width(aux_w), use_graph(graph) {
    if (graph) {
      embedding = params.add("node_embedding", static_cast<Eigen::Index>(vocab_size), hidden_width);
      for (std::size_t r = 0; r < kRelations.size(); ++r)
        relations[r] = nn::add_ggnn(params, "ggnn." + std::string(to_string(kRelations[r])), hidden_width);
    }
    const Eigen::Index width = hidden + code_width + aux_width;
    if (width == 0) throw Error(ErrorKind::kShape, "no modality enabled");
    fusion = nn::add_fusion(params, width, fusion_hidden, classes);
  }

  void init(std::uint64_t seed, double embedding_scale) {
    std::mt19937_64 rng(seed);
    if (use_graph) {
      nn::normal_init(params[embedding], embedding_scale, rng);
      for (const auto& l : relations) nn::init_ggnn(params, l, rng);
    }
    nn::init_fusion(params, fusion, rng);
  }

  nn::Matrix initial_states(const CompiledGraph& g) const {
    nn::Matrix x(static_cast<Eigen::Index>(g.embedding_rows.size()), hidden);
    for (std::size_t i = 0; i < g.embedding_rows.size(); ++i)
      x.row(static_cast<Eigen::Index>(i)) = params[embedding].row(g.embedding_rows[i]);
    return x;
  }

  nn::Vector graph_embedding(const CompiledGraph& g) const {
    return nn::hetero_forward(params, relations, g.edges, initial_states(g), steps).readout;
  }
};

// Per-kernel static features and per-sample aux rows, ready for the network.
struct FeaturePool {
  std::vector<CompiledGraph> graphs;  // per kernel slot
  std::vector<nn::Vector> codes;      // per kernel slot (width 0 when unused)
  nn::Matrix aux;                     // per sample row (width 0 when unused)
  std::vector<std::size_t> sample_kernel;
  std::vector<int> labels;
};

// Mean cross-entropy of the given pool rows; fills gradients and/or
// probabilities when requested. Each distinct graph is propagated once.
inline double network_loss(const Network& net, const FeaturePool& pool, std::span<const std::size_t> rows,
                           Gradients* grads = nullptr, nn::Matrix* probs = nullptr) {
  std::map<std::size_t, std::size_t> slot_of;  // kernel slot -> local index
  std::vector<std::size_t> kernels;
  for (auto r : rows) {
    const auto k = pool.sample_kernel[r];
    if (slot_of.emplace(k, kernels.size()).second) kernels.push_back(k);
  }

  std::vector<nn::HeteroCache> caches(net.use_graph ? kernels.size() : 0);
  std::vector<nn::Vector> readouts(kernels.size());
  if (net.use_graph) {
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      const auto& g = pool.graphs[kernels[i]];
      readouts[i] = nn::hetero_forward(net.params, net.relations, g.edges, net.initial_states(g), net.steps,
                                       grads ? &caches[i] : nullptr)
                        .readout;
    }
  }

  const Eigen::Index width = net.fusion.input;
  nn::Matrix x(static_cast<Eigen::Index>(rows.size()), width);
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    const auto local = slot_of.at(pool.sample_kernel[r]);
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::Index col = 0;
    if (net.hidden) {
      x.block(row, col, 1, net.hidden) = readouts[local].transpose();
      col += net.hidden;
    }
    if (net.code_width) {
      x.block(row, col, 1, net.code_width) = pool.codes[pool.sample_kernel[r]].transpose();
      col += net.code_width;
    }
    if (net.aux_width) x.block(row, col, 1, net.aux_width) = pool.aux.row(static_cast<Eigen::Index>(r));
    labels[i] = pool.labels.empty() ? 0 : pool.labels[r];
  }

  nn::Matrix d_x;
  nn::FusionActivations acts;
  const double loss = nn::fusion_loss(net.params, net.fusion, x, labels, grads, grads ? &d_x : nullptr, &acts);
  if (probs) *probs = acts.probs;

  if (grads && net.use_graph) {
    std::vector<nn::Vector> d_readout(kernels.size(), nn::Vector::Zero(net.hidden));
    for (std::size_t i = 0; i < rows.size(); ++i)
      d_readout[slot_of.at(pool.sample_kernel[rows[i]])] +=
          d_x.block(static_cast<Eigen::Index>(i), 0, 1, net.hidden).transpose();
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      const auto& g = pool.graphs[kernels[i]];
      const nn::Matrix d_init = nn::hetero_backward(net.params, net.relations, g.edges, caches[i], d_readout[i], *grads);
      auto& d_emb = (*grads)[net.embedding];
      for (std::size_t n = 0; n < g.embedding_rows.size(); ++n)
        d_emb.row(g.embedding_rows[n]) += d_init.row(static_cast<Eigen::Index>(n));
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

struct EpochLog {
  int epoch = 0;
  double train_loss = 0, train_accuracy = 0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct TrainingLog {
  std::vector<double> dae_losses;
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
};

struct ModelBundle {
  static constexpr int kFormatVersion = 1;

  Hyperparams hp;
  std::uint64_t seed = 0;
  ConfigSpace configs;
  std::optional<int> default_config;
  std::vector<std::string> aux_names;
  std::optional<ArchDescriptor> train_arch;
  nn::Vocabulary vocab;
  GaussRankScaler gauss_rank;
  MinMaxScaler minmax;
  std::size_t vector_dim = 0;
  nn::Dae dae;
  Network net;
  TrainingLog log;
};

inline nn::Vector code_features(const ModelBundle& b, std::span<const double> vector) {
  if (!b.hp.use_vector) return nn::Vector(0);
  if (vector.size() != b.vector_dim)
    throw Error(ErrorKind::kShape, "code vector has dimension " + std::to_string(vector.size()) + ", model expects " +
                                       std::to_string(b.vector_dim));
  const nn::Matrix scaled = b.gauss_rank.transform_row(vector).transpose();
  const auto acts = nn::dae_forward(b.dae, scaled);
  return (b.hp.dae_feature == DaeFeature::kCode ? acts.code : acts.output).row(0).transpose();
}

inline Eigen::Index code_width(const Hyperparams& hp, std::size_t vector_dim) {
  if (!hp.use_vector) return 0;
  return hp.dae_feature == DaeFeature::kCode ? hp.code : static_cast<Eigen::Index>(vector_dim);
}

// Applies the counter normalisation the model was trained with (and, when a
// target descriptor is given, the cross-architecture rescaling).
inline std::vector<double> normalized_aux(const ModelBundle& b, std::span<const double> aux,
                                          const std::optional<ArchDescriptor>& train_arch,
                                          const std::optional<ArchDescriptor>& target_arch) {
  std::vector<double> out(aux.begin(), aux.end());
  if (target_arch && !train_arch)
    throw Error(ErrorKind::kDescriptor, "a target architecture needs the training architecture descriptor");
  if (train_arch) scale_aux_cross_arch(out, b.aux_names, *train_arch, target_arch ? *target_arch : *train_arch);
  return out;
}

inline nn::Vector aux_features(const ModelBundle& b, std::span<const double> aux,
                               const std::optional<ArchDescriptor>& train_arch = std::nullopt,
                               const std::optional<ArchDescriptor>& target_arch = std::nullopt) {
  if (!b.hp.use_aux) return nn::Vector(0);
  if (aux.size() != b.aux_names.size())
    throw Error(ErrorKind::kPrediction, "expected " + std::to_string(b.aux_names.size()) + " aux features, got " +
                                            std::to_string(aux.size()));
  const auto raw = normalized_aux(b, aux, train_arch, target_arch);
  return b.minmax.transform_row(raw);
}

struct Prediction {
  int config = -1;
  nn::Vector probabilities;
};

struct PredictOptions {
  std::optional<ArchDescriptor> train_arch;  // overrides the bundle's
  std::optional<ArchDescriptor> target_arch;
};

inline Prediction predict(const ModelBundle& b, const FlowGraph& graph, std::span<const double> vector,
                          std::span<const double> aux, const PredictOptions& opts = {}) {
  if (b.hp.use_graph && graph.nodes.empty()) throw Error(ErrorKind::kPrediction, "missing flow graph");
  if (b.hp.use_vector && vector.empty()) throw Error(ErrorKind::kPrediction, "missing code vector");
  if (b.hp.use_aux && aux.empty() && !b.aux_names.empty())
    throw Error(ErrorKind::kPrediction, "missing aux features");

  nn::Vector g(0);
  if (b.hp.use_graph) g = b.net.graph_embedding(nn::compile_graph(graph, b.vocab));
  const auto code = code_features(b, vector);
  const auto train_arch = opts.train_arch ? opts.train_arch : b.train_arch;
  const auto a = aux_features(b, aux, train_arch, opts.target_arch);

  Prediction p;
  p.probabilities = nn::fuse_and_classify(b.net.params, b.net.fusion, g, code, a);
  Eigen::Index best = 0;
  p.probabilities.maxCoeff(&best);
  p.config = static_cast<int>(best);
  return p;
}

inline Prediction predict(const ModelBundle& b, const Dataset& ds, const Sample& s, const PredictOptions& opts = {}) {
  const auto& k = ds.kernel_of(s);
  return predict(b, k.graph, k.vector, s.aux, opts);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainOptions {
  std::optional<ArchDescriptor> train_arch;
  std::function<void(const std::string&)> log;
};

namespace detail {

struct PoolBuilder {
  const Dataset& ds;
  const ModelBundle& bundle;
  std::map<std::size_t, std::size_t> slot;  // dataset kernel -> pool slot

  FeaturePool build(std::span<const std::size_t> ids, bool need_labels) {
    FeaturePool pool;
    const auto aw = bundle.net.aux_width;
    pool.aux.resize(static_cast<Eigen::Index>(ids.size()), aw);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& s = ds.samples.at(ids[i]);
      auto [it, inserted] = slot.try_emplace(s.kernel, pool.graphs.size());
      if (inserted) {
        const auto& k = ds.kernels[s.kernel];
        pool.graphs.push_back(bundle.hp.use_graph ? nn::compile_graph(k.graph, bundle.vocab) : CompiledGraph{});
        pool.codes.push_back(code_features(bundle, k.vector));
      }
      pool.sample_kernel.push_back(it->second);
      if (aw) pool.aux.row(static_cast<Eigen::Index>(i)) = aux_features(bundle, s.aux, bundle.train_arch).transpose();
      if (need_labels) pool.labels.push_back(s.label);
    }
    return pool;
  }
};

inline std::pair<double, double> evaluate_pool(const Network& net, const FeaturePool& pool) {
  std::vector<std::size_t> rows(pool.sample_kernel.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  nn::Matrix probs;
  const double loss = network_loss(net, pool, rows, nullptr, &probs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Eigen::Index best = 0;
    probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    if (best == pool.labels[i]) ++correct;
  }
  return {loss, static_cast<double>(correct) / static_cast<double>(rows.size())};
}

}  // namespace detail

// Stage one fits the autoencoder on the training kernels' code vectors; stage
// two freezes it and trains embeddings, relation networks and the fusion head
// jointly with AdamW on cross-entropy. With a validation split the parameters
// of the epoch with the best validation accuracy (lower loss on ties) are
// kept; without one, the final parameters are.
inline ModelBundle train(const Dataset& ds, std::span<const std::size_t> train_ids,
                         std::span<const std::size_t> val_ids, const Hyperparams& hp, std::uint64_t seed,
                         const TrainOptions& opts = {}) {
  if (train_ids.empty()) throw Error(ErrorKind::kTraining, "empty training split");
  const std::size_t classes = ds.configs.size();
  std::vector<std::size_t> class_counts(classes, 0);
  for (auto id : train_ids) {
    const auto& s = ds.samples.at(id);
    if (s.label < 0) throw Error(ErrorKind::kTraining, "unlabeled training sample " + s.kernel_id + "/" + s.input_id);
    ++class_counts[static_cast<std::size_t>(s.label)];
  }
  for (auto id : val_ids)
    if (ds.samples.at(id).label < 0)
      throw Error(ErrorKind::kTraining, "unlabeled validation sample " + ds.samples[id].kernel_id);
  if (!hp.allow_empty_classes)
    for (std::size_t c = 0; c < classes; ++c)
      if (class_counts[c] == 0)
        throw Error(ErrorKind::kTraining, "no training samples for class '" + ds.configs.id(c) + "'");
  if (hp.use_aux && ds.aux_names.empty()) throw Error(ErrorKind::kTraining, "aux features enabled but dataset has none");

  ModelBundle b;
  b.hp = hp;
  b.seed = seed;
  b.configs = ds.configs;
  b.default_config = ds.default_config;
  b.aux_names = ds.aux_names;
  b.train_arch = opts.train_arch;
  b.vector_dim = ds.vector_dim();
  b.gauss_rank = GaussRankScaler(hp.gauss_rank_epsilon);

  std::vector<std::size_t> train_kernels;
  {
    std::set<std::size_t> ks;
    for (auto id : train_ids) ks.insert(ds.samples[id].kernel);
    train_kernels.assign(ks.begin(), ks.end());
  }

  // Node vocabulary from training graphs only.
  {
    std::vector<std::reference_wrapper<const FlowGraph>> graphs;
    for (auto k : train_kernels) graphs.emplace_back(ds.kernels[k].graph);
    b.vocab = nn::Vocabulary::build(graphs);
  }

  // Stage one.
  if (hp.use_vector) {
    nn::Matrix vectors(static_cast<Eigen::Index>(train_kernels.size()), static_cast<Eigen::Index>(b.vector_dim));
    for (std::size_t i = 0; i < train_kernels.size(); ++i)
      vectors.row(static_cast<Eigen::Index>(i)) =
          Eigen::Map<const nn::Vector>(ds.kernels[train_kernels[i]].vector.data(), static_cast<Eigen::Index>(b.vector_dim))
              .transpose();
    b.gauss_rank.fit(vectors);
    const nn::Matrix scaled = b.gauss_rank.transform(vectors);
    b.dae = nn::Dae(static_cast<Eigen::Index>(b.vector_dim), hp.dae_hidden, hp.code);
    b.dae.init(nn::derive_seed(seed, 1));
    nn::DaeTrainOptions dopts{hp.swap_rate, hp.dae_epochs, hp.dae_learning_rate, hp.dae_weight_decay, opts.log};
    b.log.dae_losses = nn::dae_pretrain(b.dae, scaled, dopts, nn::derive_seed(seed, 2));
  }

  if (hp.use_aux) {
    nn::Matrix aux(static_cast<Eigen::Index>(train_ids.size()), static_cast<Eigen::Index>(b.aux_names.size()));
    for (std::size_t i = 0; i < train_ids.size(); ++i) {
      const auto row = normalized_aux(b, ds.samples[train_ids[i]].aux, b.train_arch, std::nullopt);
      for (std::size_t f = 0; f < row.size(); ++f) aux(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = row[f];
    }
    b.minmax.fit(aux);
  }

  // Stage two.
  b.net = Network(b.vocab.size(), hp.hidden, code_width(hp, b.vector_dim),
                  hp.use_aux ? static_cast<Eigen::Index>(b.aux_names.size()) : 0, hp.fusion_hidden,
                  static_cast<Eigen::Index>(classes), hp.steps, hp.use_graph);
  b.net.init(nn::derive_seed(seed, 3), hp.embedding_scale);

  const auto train_pool = detail::PoolBuilder{ds, b, {}}.build(train_ids, true);
  const auto val_pool = detail::PoolBuilder{ds, b, {}}.build(val_ids, true);

  nn::AdamW opt(b.net.params, hp.learning_rate, hp.weight_decay);
  std::mt19937_64 shuffle_rng(nn::derive_seed(seed, 4));
  std::vector<std::size_t> order(train_ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = hp.batch_size > 0 ? static_cast<std::size_t>(hp.batch_size) : order.size();

  ParameterStore best = b.net.params;
  double best_acc = -1.0, best_loss = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    if (batch < order.size()) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(batch, order.size() - start));
      auto grads = b.net.params.zeros_like();
      nn::Matrix probs;
      loss_sum += network_loss(b.net, train_pool, rows, &grads, &probs) * static_cast<double>(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::Index best_c = 0;
        probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&best_c);
        if (best_c == train_pool.labels[rows[i]]) ++correct;
      }
      opt.step(b.net.params, grads);
    }
    EpochLog e;
    e.epoch = epoch;
    e.train_loss = loss_sum / static_cast<double>(order.size());
    e.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (!val_ids.empty()) {
      std::tie(e.val_loss, e.val_accuracy) = detail::evaluate_pool(b.net, val_pool);
      if (e.val_accuracy > best_acc || (e.val_accuracy == best_acc && e.val_loss < best_loss)) {
        best_acc = e.val_accuracy;
        best_loss = e.val_loss;
        b.log.best_epoch = epoch;
        best = b.net.params;
      }
    } else {
      b.log.best_epoch = epoch;
    }
    b.log.epochs.push_back(e);
    if (opts.log && (epoch % 50 == 0 || epoch + 1 == hp.epochs)) {
      std::string msg = "epoch " + std::to_string(epoch) + " train_loss=" + text::format_double(e.train_loss) +
                        " train_acc=" + text::format_double(e.train_accuracy);
      if (!val_ids.empty())
        msg += " val_loss=" + text::format_double(e.val_loss) + " val_acc=" + text::format_double(e.val_accuracy);
      opts.log(msg);
    }
    if (!b.net.params.all_finite()) throw Error(ErrorKind::kTraining, "parameters diverged at epoch " + std::to_string(epoch));
  }
  if (!val_ids.empty()) b.net.params = best;
  return b;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ConfigSpace& cs) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : cs.dimensions()) dims.push_back({{"name", d.name}, {"values", d.values}});
  return {{"dimensions", dims}};
}

inline ConfigSpace config_space_from_json(const nlohmann::json& j) {
  std::vector<ConfigDimension> dims;
  for (const auto& d : j.at("dimensions"))
    dims.push_back({d.at("name").get<std::string>(), d.at("values").get<std::vector<std::string>>()});
  return ConfigSpace::cartesian(std::move(dims));
}

inline nlohmann::json to_json(const ModelBundle& b) {
  nlohmann::json epochs = nlohmann::json::array();
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  for (const auto& e : b.log.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"val_loss", num(e.val_loss)},
                      {"val_accuracy", num(e.val_accuracy)}});
  nlohmann::json j = {
      {"format", "mga-bundle"},
      {"format_version", ModelBundle::kFormatVersion},
      {"seed", b.seed},
      {"hyperparameters", b.hp.to_json()},
      {"config_space", to_json(b.configs)},
      {"default_config", b.default_config ? nlohmann::json(*b.default_config) : nlohmann::json(nullptr)},
      {"aux_names", b.aux_names},
      {"train_arch", b.train_arch ? b.train_arch->to_json() : nlohmann::json(nullptr)},
      {"vocabulary", b.vocab.to_json()},
      {"gauss_rank", b.gauss_rank.to_json()},
      {"minmax", b.minmax.to_json()},
      {"vector_dim", b.vector_dim},
      {"dae_parameters", b.dae.params.to_json()},
      {"network_parameters", b.net.params.to_json()},
      {"training", {{"dae_losses", b.log.dae_losses}, {"epochs", epochs}, {"best_epoch", b.log.best_epoch}}},
  };
  return j;
}

inline ModelBundle bundle_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "mga-bundle") throw Error(ErrorKind::kFormat, "not a model bundle");
    const int version = j.at("format_version").get<int>();
    if (version != ModelBundle::kFormatVersion)
      throw Error(ErrorKind::kFormat, "bundle format version " + std::to_string(version) + " is not supported (expected " +
                                          std::to_string(ModelBundle::kFormatVersion) + ")");
    ModelBundle b;
    b.seed = j.at("seed").get<std::uint64_t>();
    b.hp = Hyperparams::from_json(j.at("hyperparameters"));
    b.configs = config_space_from_json(j.at("config_space"));
    if (!j.at("default_config").is_null()) b.default_config = j.at("default_config").get<int>();
    b.aux_names = j.at("aux_names").get<std::vector<std::string>>();
    if (!j.at("train_arch").is_null()) b.train_arch = ArchDescriptor::from_json(j.at("train_arch"));
    b.vocab = nn::Vocabulary::from_json(j.at("vocabulary"));
    b.gauss_rank = GaussRankScaler::from_json(j.at("gauss_rank"));
    b.minmax = MinMaxScaler::from_json(j.at("minmax"));
    b.vector_dim = j.at("vector_dim").get<std::size_t>();
    if (b.hp.use_vector) {
      b.dae = nn::Dae(static_cast<Eigen::Index>(b.vector_dim), b.hp.dae_hidden, b.hp.code);
      b.dae.params.load_json(j.at("dae_parameters"));
    }
    b.net = Network(b.vocab.size(), b.hp.hidden, code_width(b.hp, b.vector_dim),
                    b.hp.use_aux ? static_cast<Eigen::Index>(b.aux_names.size()) : 0, b.hp.fusion_hidden,
                    static_cast<Eigen::Index>(b.configs.size()), b.hp.steps, b.hp.use_graph);
    b.net.params.load_json(j.at("network_parameters"));
    const auto& t = j.at("training");
    b.log.dae_losses = t.at("dae_losses").get<std::vector<double>>();
    b.log.best_epoch = t.at("best_epoch").get<int>();
    auto num = [](const nlohmann::json& v) {
      return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    for (const auto& e : t.at("epochs"))
      b.log.epochs.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                              e.at("train_accuracy").get<double>(), num(e.at("val_loss")), num(e.at("val_accuracy"))});
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("model bundle: ") + e.what());
  }
}

inline void save_bundle(const ModelBundle& b, const std::filesystem::path& path) {
  text::write_file(path, to_json(b).dump());
}

inline ModelBundle load_bundle(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace mga
