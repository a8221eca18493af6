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
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mga/dataset.hpp"
#include "mga/error.hpp"
#include "mga/text.hpp"

namespace mga {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Graph files: one JSON object per line, tagged "node" or "edge".
// ---------------------------------------------------------------------------

inline FlowGraph parse_graph_jsonl(std::string_view content, const std::string& origin) {
  FlowGraph g;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = text::trim(content.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kFormat, where + ": " + e.what());
    }
    try {
      const auto type = obj.at("type").get<std::string>();
      if (type == "node") {
        const auto kind = parse_node_kind(obj.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorKind::kFormat, where + ": unknown node kind");
        g.nodes.push_back({obj.at("id").get<int>(), *kind, obj.value("token", std::string())});
      } else if (type == "edge") {
        const auto rel = parse_relation(obj.at("relation").get<std::string>());
        if (!rel) throw Error(ErrorKind::kFormat, where + ": unknown edge relation");
        g.edges.push_back({obj.at("src").get<int>(), obj.at("dst").get<int>(), *rel,
                           obj.value("position", 0)});
      } else {
        throw Error(ErrorKind::kFormat, where + ": unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kFormat, where + ": " + e.what());
    }
  }
  return g;
}

inline FlowGraph read_graph(const fs::path& path) {
  return parse_graph_jsonl(text::read_file(path), path.string());
}

inline std::string to_jsonl(const FlowGraph& g) {
  std::string out;
  for (const auto& n : g.nodes) {
    json obj = {{"type", "node"}, {"id", n.id}, {"kind", to_string(n.kind)}, {"token", n.token}};
    out += obj.dump() + "\n";
  }
  for (const auto& e : g.edges) {
    json obj = {{"type", "edge"},
                {"src", e.src},
                {"dst", e.dst},
                {"relation", to_string(e.relation)},
                {"position", e.position}};
    out += obj.dump() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Code vectors: header `kernel_id,v0..v{D-1}`.
// ---------------------------------------------------------------------------

inline std::map<std::string, std::vector<double>> read_code_vectors(const fs::path& path) {
  const auto content = text::read_file(path);
  std::map<std::string, std::vector<double>> out;
  std::size_t dim = 0;
  bool header = true;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    const auto line = text::trim(std::string_view(content).substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto cells = text::split(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (header) {
      if (cells.empty() || cells[0] != "kernel_id")
        throw Error(ErrorKind::kFormat, where + ": header must start with kernel_id");
      dim = cells.size() - 1;
      header = false;
      continue;
    }
    if (cells.size() - 1 != dim)
      throw Error(ErrorKind::kSchema, where + ": code vector dimension " +
                                          std::to_string(cells.size() - 1) + " differs from " +
                                          std::to_string(dim));
    std::vector<double> values(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!text::parse_double(cells[i + 1], values[i]) || !std::isfinite(values[i]))
        throw Error(ErrorKind::kSchema, where + ": non-finite code vector entry");
    }
    if (!out.emplace(cells[0], std::move(values)).second)
      throw Error(ErrorKind::kSchema, where + ": duplicate code vector for '" + cells[0] + "'");
  }
  if (header) throw Error(ErrorKind::kFormat, path.string() + ": missing header");
  return out;
}

inline std::string to_csv(const std::vector<std::pair<std::string, std::vector<double>>>& vectors) {
  std::string out = "kernel_id";
  const std::size_t dim = vectors.empty() ? 0 : vectors.front().second.size();
  for (std::size_t i = 0; i < dim; ++i) out += ",v" + std::to_string(i);
  out += "\n";
  for (const auto& [id, v] : vectors) {
    out += id;
    for (double x : v) out += "," + text::format_double(x);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest join
// ---------------------------------------------------------------------------

struct KernelEntry {
  std::string graph_path;
  std::string vector_row;
  std::string application_id;
  std::string vector_path;  // empty: the manifest-level vectors file
};

struct Manifest {
  fs::path base_dir;
  std::map<std::string, KernelEntry> kernels;
  std::string vectors;
  std::string counters;
  std::string runtimes;
  std::optional<std::vector<std::string>> aux_features;  // default depends on the task
  std::optional<std::string> default_config;
  std::optional<ConfigSpace> config_space;
  std::string task;

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

inline std::string default_application_id(const std::string& kernel_id) {
  return kernel_id.substr(0, kernel_id.find('.'));
}

inline Manifest parse_manifest(const json& j, fs::path base_dir) {
  Manifest m;
  m.base_dir = std::move(base_dir);
  try {
    for (const auto& [kid, entry] : j.at("kernels").items()) {
      KernelEntry k;
      k.graph_path = entry.at("graph_path").get<std::string>();
      k.vector_row = entry.value("vector_row", kid);
      k.application_id = entry.value("application_id", default_application_id(kid));
      k.vector_path = entry.value("vector_path", std::string());
      m.kernels.emplace(kid, std::move(k));
    }
    m.vectors = j.value("vectors", std::string());
    m.counters = j.value("counters", std::string());
    m.runtimes = j.value("runtimes", std::string());
    m.task = j.value("task", std::string());
    if (j.contains("aux_features")) m.aux_features = j.at("aux_features").get<std::vector<std::string>>();
    if (j.contains("default_config") && !j.at("default_config").is_null())
      m.default_config = j.at("default_config").get<std::string>();
    if (j.contains("config_space")) {
      std::vector<ConfigDimension> dims;
      for (const auto& d : j.at("config_space").at("dimensions"))
        dims.push_back({d.at("name").get<std::string>(), d.at("values").get<std::vector<std::string>>()});
      m.config_space = ConfigSpace::cartesian(std::move(dims));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, "manifest: " + std::string(e.what()));
  }
  return m;
}

inline Manifest read_manifest(const fs::path& path) {
  const auto content = text::read_file(path);
  json j;
  try {
    j = json::parse(content);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

struct LoadOptions {
  // When false, samples are enumerated from the aux-feature table instead
  // of the runtime table and carry no labels (prediction-only inputs).
  bool require_runtimes = true;
};

namespace detail {

inline std::string list_preview(const std::vector<std::string>& items, std::size_t max_items = 20) {
  std::vector<std::string> head(items.begin(), items.begin() + std::min(items.size(), max_items));
  auto out = text::join(head, ", ");
  if (items.size() > max_items) out += ", ... (" + std::to_string(items.size()) + " total)";
  return out;
}

using PairKey = std::pair<std::string, std::string>;

inline std::string pair_name(const PairKey& k) { return k.first + "/" + k.second; }

}  // namespace detail

inline Dataset load_dataset(const Manifest& m, const LoadOptions& opts = {}) {
  Dataset ds;

  // Kernels: graph + code vector.
  std::map<std::string, std::map<std::string, std::vector<double>>> vector_files;
  auto vectors_for = [&](const std::string& file) -> const std::map<std::string, std::vector<double>>& {
    auto it = vector_files.find(file);
    if (it == vector_files.end()) {
      if (file.empty()) throw Error(ErrorKind::kIngestion, "manifest names no code vector file");
      it = vector_files.emplace(file, read_code_vectors(m.resolve(file))).first;
    }
    return it->second;
  };

  std::vector<std::string> missing_vectors;
  for (const auto& [kid, entry] : m.kernels) {
    Kernel k;
    k.id = kid;
    k.application_id = entry.application_id;
    k.graph = read_graph(m.resolve(entry.graph_path));
    const auto violations = validate_graph(k.graph);
    if (!violations.empty())
      throw Error(ErrorKind::kValidation,
                  "graph of kernel '" + kid + "' (" + m.resolve(entry.graph_path).string() +
                      "): " + text::join(violations, "; "));
    const auto& vecs = vectors_for(entry.vector_path.empty() ? m.vectors : entry.vector_path);
    const auto v = vecs.find(entry.vector_row);
    if (v == vecs.end()) {
      missing_vectors.push_back(kid);
      continue;
    }
    k.vector = v->second;
    ds.kernels.push_back(std::move(k));
  }
  if (!missing_vectors.empty())
    throw Error(ErrorKind::kJoin, "no code vector row for kernels: " + detail::list_preview(missing_vectors));
  for (const auto& k : ds.kernels)
    if (k.vector.size() != ds.kernels.front().vector.size())
      throw Error(ErrorKind::kSchema, "code vector of '" + k.id + "' has dimension " +
                                          std::to_string(k.vector.size()) + ", expected " +
                                          std::to_string(ds.kernels.front().vector.size()));
  std::map<std::string, std::size_t> kernel_index;
  for (std::size_t i = 0; i < ds.kernels.size(); ++i) kernel_index[ds.kernels[i].id] = i;

  // Runtimes.
  std::map<detail::PairKey, std::map<std::string, double>> runtimes;
  std::set<std::string> config_ids;
  if (!m.runtimes.empty()) {
    const auto path = m.resolve(m.runtimes);
    const auto t = text::read_table(path);
    const int ck = t.column("kernel_id"), ci = t.column("input_id"), cc = t.column("config_id"),
              cr = t.column("runtime_seconds");
    if (ck < 0 || ci < 0 || cc < 0 || cr < 0)
      throw Error(ErrorKind::kFormat,
                  path.string() + ": header must be kernel_id,input_id,config_id,runtime_seconds");
    std::set<std::string> unknown;
    for (const auto& row : t.rows) {
      double v = 0;
      if (!text::parse_double(row[cr], v) || !(v > 0) || !std::isfinite(v))
        throw Error(ErrorKind::kSchema, path.string() + ": runtime for " + row[ck] + "/" + row[ci] +
                                            "/" + row[cc] + " is not a positive number");
      if (!kernel_index.count(row[ck])) unknown.insert(row[ck]);
      auto& cell = runtimes[{row[ck], row[ci]}];
      if (!cell.emplace(row[cc], v).second)
        throw Error(ErrorKind::kJoin, path.string() + ": duplicate runtime for " + row[ck] + "/" +
                                          row[ci] + "/" + row[cc]);
      config_ids.insert(row[cc]);
    }
    if (!unknown.empty())
      throw Error(ErrorKind::kJoin, "kernels in runtime table without graph/vector data: " +
                                        detail::list_preview({unknown.begin(), unknown.end()}));
  } else if (opts.require_runtimes) {
    throw Error(ErrorKind::kIngestion, "manifest names no runtime table");
  }

  std::optional<ConfigSpace> declared = m.config_space;
  if (!declared && m.task == "omp_threads_sched_chunk") declared = omp_thread_schedule_chunk_space();
  if (declared) {
    ds.configs = *declared;
    for (const auto& id : config_ids)
      if (!ds.configs.index_of(id))
        throw Error(ErrorKind::kSchema, "config '" + id + "' is not part of the declared config space");
  } else {
    std::vector<std::string> ids(config_ids.begin(), config_ids.end());
    if (m.default_config && !config_ids.count(*m.default_config)) ids.push_back(*m.default_config);
    if (ids.empty() && opts.require_runtimes) throw Error(ErrorKind::kSchema, "no configurations found");
    if (!ids.empty()) ds.configs = ConfigSpace::from_ids(std::move(ids));
  }
  if (m.default_config) {
    ds.default_config = ds.configs.index_of(*m.default_config);
    if (!ds.default_config)
      throw Error(ErrorKind::kSchema, "default config '" + *m.default_config + "' not in config space");
  }

  // Aux features, merged per (kernel, input) across runs.
  ds.aux_names = m.aux_features ? *m.aux_features
                 : m.task == "device_mapping" ? device_mapping_schema()
                                              : default_counter_schema();
  std::map<detail::PairKey, std::vector<std::optional<double>>> aux;
  if (!ds.aux_names.empty()) {
    if (m.counters.empty()) throw Error(ErrorKind::kIngestion, "manifest names no counters table");
    const auto path = m.resolve(m.counters);
    const auto t = text::read_table(path);
    const int ck = t.column("kernel_id"), ci = t.column("input_id"), cc = t.column("config_id");
    if (ck < 0 || ci < 0)
      throw Error(ErrorKind::kFormat, path.string() + ": header must start with kernel_id,input_id");
    std::vector<int> cols;
    for (const auto& name : ds.aux_names) {
      const int c = t.column(name);
      if (c < 0) throw Error(ErrorKind::kSchema, path.string() + ": no column '" + name + "'");
      cols.push_back(c);
    }
    const std::string default_id = ds.default_config ? ds.configs.id(*ds.default_config) : std::string();
    for (const auto& row : t.rows) {
      if (cc >= 0 && ds.default_config && !row[cc].empty() && row[cc] != default_id) continue;
      auto& cell = aux[{row[ck], row[ci]}];
      cell.resize(cols.size());
      for (std::size_t f = 0; f < cols.size(); ++f) {
        const auto& raw = row[cols[f]];
        if (raw.empty()) continue;
        double v = 0;
        if (!text::parse_double(raw, v) || !std::isfinite(v) || v < 0)
          throw Error(ErrorKind::kSchema, path.string() + ": " + ds.aux_names[f] + " for " + row[ck] +
                                              "/" + row[ci] + " must be a finite non-negative number");
        if (cell[f] && *cell[f] != v)
          throw Error(ErrorKind::kJoin, path.string() + ": conflicting values for " + ds.aux_names[f] +
                                            " of " + row[ck] + "/" + row[ci]);
        cell[f] = v;
      }
    }
  }

  // Join.
  std::vector<detail::PairKey> pairs;
  if (!m.runtimes.empty()) {
    for (const auto& [k, _] : runtimes) pairs.push_back(k);
  } else {
    for (const auto& [k, _] : aux)
      if (kernel_index.count(k.first)) pairs.push_back(k);
  }

  std::vector<std::string> incomplete;
  for (const auto& key : pairs) {
    Sample s;
    s.kernel_id = key.first;
    s.input_id = key.second;
    s.kernel = kernel_index.at(key.first);
    s.application_id = ds.kernels[s.kernel].application_id;
    if (!ds.aux_names.empty()) {
      const auto it = aux.find(key);
      bool complete = it != aux.end();
      if (complete) {
        for (const auto& v : it->second) complete = complete && v.has_value();
      }
      if (!complete) {
        incomplete.push_back(detail::pair_name(key) + " (aux features)");
        continue;
      }
      for (const auto& v : it->second) s.aux.push_back(*v);
    }
    const auto rt = runtimes.find(key);
    if (rt != runtimes.end()) {
      s.runtimes.assign(ds.configs.size(), std::nullopt);
      for (const auto& [cid, v] : rt->second) s.runtimes[*ds.configs.index_of(cid)] = v;
      if (ds.default_config && !s.runtimes[*ds.default_config]) {
        incomplete.push_back(detail::pair_name(key) + " (default config runtime)");
        continue;
      }
      s.label = oracle_label(s.runtimes);
    }
    ds.samples.push_back(std::move(s));
  }
  if (!incomplete.empty())
    throw Error(ErrorKind::kJoin, "incomplete samples: " + detail::list_preview(incomplete));
  return ds;
}

inline Dataset load_manifest(const fs::path& path, const LoadOptions& opts = {}) {
  return load_dataset(read_manifest(path), opts);
}

}  // namespace mga
