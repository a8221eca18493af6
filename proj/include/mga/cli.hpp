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
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mga/dataset.hpp"
#include "mga/dataset_io.hpp"
#include "mga/error.hpp"
#include "mga/evaluation.hpp"
#include "mga/model.hpp"
#include "mga/pipeline.hpp"
#include "mga/plot.hpp"
#include "mga/preprocess.hpp"
#include "mga/synthetic.hpp"
#include "mga/text.hpp"

namespace mga::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace detail {

// --seed wins; otherwise MGA_SEED; otherwise `fallback`.
inline std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t value, std::uint64_t fallback) {
  if (flag->count()) return value;
  if (const char* env = std::getenv("MGA_SEED")) {
    std::uint64_t v = 0;
    const std::string s = env;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
      throw Error(ErrorKind::kInput, "MGA_SEED='" + s + "' is not an unsigned integer");
    return v;
  }
  return fallback;
}

inline std::optional<Task> task_flag(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto t = parse_task(s);
  if (!t) throw Error(ErrorKind::kInput, "unknown task '" + s + "'");
  return t;
}

inline std::optional<ArchDescriptor> arch_flag(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_arch_descriptor(path);
}

inline void emit(const std::string& out_path, const std::string& content, std::ostream& out) {
  if (out_path.empty() || out_path == "-") {
    out << content;
  } else {
    text::write_file(out_path, content);
  }
}

inline std::vector<int> numeric_columns(const text::Table& t, const std::set<std::string>& skip) {
  std::vector<int> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (!skip.count(t.header[c])) cols.push_back(static_cast<int>(c));
  return cols;
}

inline double cell_value(const text::Table& t, std::size_t row, int col, const std::string& origin) {
  double v = 0;
  if (!text::parse_double(t.rows[row][col], v) || !std::isfinite(v))
    throw Error(ErrorKind::kSchema, origin + ": '" + t.header[col] + "' in row " + std::to_string(row + 2) +
                                        " is not a number");
  return v;
}

}  // namespace detail

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

// -- prepare ---------------------------------------------------------------

struct PrepareArgs {
  std::string manifest, task;
};

inline json dataset_summary(const Dataset& ds, const std::string& task) {
  std::set<std::string> inputs, apps;
  std::map<std::string, std::size_t> dist;
  for (const auto& s : ds.samples) {
    inputs.insert(s.input_id);
    apps.insert(s.application_id);
    if (s.label >= 0) ++dist[ds.configs.id(static_cast<std::size_t>(s.label))];
  }
  json summary = {{"task", task},
                  {"kernels", ds.kernels.size()},
                  {"applications", apps.size()},
                  {"inputs", inputs.size()},
                  {"samples", ds.samples.size()},
                  {"classes", ds.configs.size()},
                  {"config_dimensions", json::array()},
                  {"default_config", ds.default_config ? json(ds.configs.id(*ds.default_config)) : json(nullptr)},
                  {"vector_dim", ds.vector_dim()},
                  {"aux_features", ds.aux_names},
                  {"label_distribution", dist}};
  for (const auto& d : ds.configs.dimensions()) summary["config_dimensions"].push_back({{"name", d.name}, {"values", d.values}});
  return summary;
}

inline int cmd_prepare(const PrepareArgs& a, Streams io) {
  const auto task = detail::task_flag(a.task);
  const auto ds = load_for_task(a.manifest, task);
  const auto m = read_manifest(a.manifest);
  io.out << dataset_summary(ds, task ? std::string(to_string(*task)) : m.task).dump(2) << "\n";
  return 0;
}

// -- select-counters -------------------------------------------------------

struct SelectArgs {
  std::string counters, runtimes, out, config;
  std::size_t k = 5;
};

// Joins counter rows with runtimes on (kernel, input, config). A counters
// table without a config_id column is joined with the runtimes of --config.
inline int cmd_select_counters(const SelectArgs& a, Streams io) {
  const auto ct = text::read_table(a.counters);
  const auto rt = text::read_table(a.runtimes);
  const int ck = ct.column("kernel_id"), ci = ct.column("input_id"), cc = ct.column("config_id");
  const int rk = rt.column("kernel_id"), ri = rt.column("input_id"), rc = rt.column("config_id"),
            rr = rt.column("runtime_seconds");
  if (ck < 0 || ci < 0) throw Error(ErrorKind::kFormat, a.counters + ": header must contain kernel_id,input_id");
  if (rk < 0 || ri < 0 || rc < 0 || rr < 0)
    throw Error(ErrorKind::kFormat, a.runtimes + ": header must be kernel_id,input_id,config_id,runtime_seconds");
  if (cc < 0 && a.config.empty())
    throw Error(ErrorKind::kInput, a.counters + " has no config_id column; pass --config to pick the runtimes");

  std::map<std::tuple<std::string, std::string, std::string>, double> times;
  for (std::size_t r = 0; r < rt.rows.size(); ++r)
    times[{rt.rows[r][rk], rt.rows[r][ri], rt.rows[r][rc]}] = detail::cell_value(rt, r, rr, a.runtimes);

  const auto cols = detail::numeric_columns(ct, {"kernel_id", "input_id", "config_id"});
  std::vector<std::string> names;
  for (int c : cols) names.push_back(ct.header[c]);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (std::size_t r = 0; r < ct.rows.size(); ++r) {
    const auto& row = ct.rows[r];
    const auto it = times.find({row[ck], row[ci], cc >= 0 ? row[cc] : a.config});
    if (it == times.end()) continue;
    std::vector<double> v;
    for (int c : cols) v.push_back(detail::cell_value(ct, r, c, a.counters));
    rows.push_back(std::move(v));
    y.push_back(it->second);
  }
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];

  const auto scores = pearson_select(x, names, y, a.k);
  std::string csv = "rank,counter,pearson_r\n";
  for (std::size_t i = 0; i < scores.size(); ++i)
    csv += std::to_string(i + 1) + "," + scores[i].name + "," + text::format_double(scores[i].r) + "\n";
  detail::emit(a.out, csv, io.out);
  return 0;
}

// -- train -----------------------------------------------------------------

struct TrainArgs {
  std::string manifest, task, protocol = "kfold5", bundle, out_dir = "reports", config, arch_train,
                                features = "all";
  std::uint64_t seed = 0;
  const CLI::Option* seed_flag = nullptr;
  int epochs = -1;
  int jobs = 1;
  bool allow_empty_classes = false;
  bool verbose = false;
};

inline Hyperparams hyperparams_for(const TrainArgs& a) {
  Hyperparams hp;
  if (!a.config.empty()) {
    try {
      hp.update_from_json(json::parse(text::read_file(a.config)));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kFormat, a.config + ": " + e.what());
    }
  }
  if (a.epochs >= 0) hp.epochs = a.epochs;
  if (a.allow_empty_classes) hp.allow_empty_classes = true;
  if (a.features == "static") {
    hp.use_aux = false;
  } else if (a.features == "dynamic") {
    hp.use_graph = hp.use_vector = false;
  } else if (a.features != "all") {
    throw Error(ErrorKind::kInput, "unknown feature set '" + a.features + "'");
  }
  return hp;
}

inline int cmd_train(const TrainArgs& a, Streams io) {
  const auto task = detail::task_flag(a.task);
  const auto hp = hyperparams_for(a);
  const auto seed = detail::resolve_seed(a.seed_flag, a.seed, 0);
  const auto ds = load_for_task(a.manifest, task);

  CrossValidationOptions cv;
  cv.jobs = a.jobs;
  cv.positive_class = positive_class_for(ds, task.value_or(Task::kOmpThreads));
  cv.train.train_arch = detail::arch_flag(a.arch_train);
  std::mutex log_mutex;
  if (a.verbose)
    cv.train.log = [&](const std::string& msg) {
      std::lock_guard lock(log_mutex);
      io.err << msg << "\n";
    };

  json summary = {{"samples", ds.samples.size()}, {"seed", seed}, {"hyperparameters", hp.to_json()}};
  if (a.protocol != "none") {
    const auto plan = make_plan(ds, a.protocol, seed);
    for (const auto& w : plan.warnings) io.err << "warning: " << w << "\n";
    const auto results = cross_validate(ds, plan, hp, seed, cv);
    write_fold_results(a.out_dir, a.protocol, results);
    std::vector<FoldReport> reports;
    for (const auto& r : results) reports.push_back(r.report);
    summary["cross_validation"] = summarize(a.protocol, reports);
    summary["reports"] = a.out_dir;
  }
  if (!a.bundle.empty()) {
    std::vector<std::size_t> all(ds.samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto bundle = train(ds, all, {}, hp, seed, cv.train);
    save_bundle(bundle, a.bundle);
    summary["bundle"] = a.bundle;
  }
  io.out << summary.dump(2) << "\n";
  return 0;
}

// -- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string bundle, manifest, task, arch_train, arch_target, out;
};

inline std::string predictions_csv(const ModelBundle& b, const Dataset& ds, const PredictOptions& opts) {
  std::string csv = "kernel_id,input_id,predicted_config";
  for (const auto& id : b.configs.ids()) csv += ",p_" + id;
  csv += "\n";
  for (const auto& s : ds.samples) {
    const auto p = predict(b, ds, s, opts);
    csv += s.kernel_id + "," + s.input_id + "," + b.configs.id(static_cast<std::size_t>(p.config));
    for (Eigen::Index c = 0; c < p.probabilities.size(); ++c) csv += "," + text::format_double(p.probabilities[c]);
    csv += "\n";
  }
  return csv;
}

inline int cmd_predict(const PredictArgs& a, Streams io) {
  const auto bundle = load_bundle(a.bundle);
  LoadOptions lo;
  lo.require_runtimes = false;
  const auto ds = load_for_task(a.manifest, detail::task_flag(a.task), lo);
  if (bundle.hp.use_aux && ds.aux_names != bundle.aux_names)
    throw Error(ErrorKind::kSchema, "aux features [" + text::join(ds.aux_names, ",") + "] do not match the model's [" +
                                        text::join(bundle.aux_names, ",") + "]");
  PredictOptions opts;
  opts.train_arch = detail::arch_flag(a.arch_train);
  opts.target_arch = detail::arch_flag(a.arch_target);
  detail::emit(a.out, predictions_csv(bundle, ds, opts), io.out);
  return 0;
}

// -- report ----------------------------------------------------------------

struct ReportArgs {
  std::string reports, out_dir, manifest, predictions, kernel;
};

struct CounterComparison {
  std::vector<std::string> counters;
  std::vector<double> mean_ratio;  // predicted / default, averaged over samples
  std::size_t samples = 0;
};

// Counter values under the predicted config relative to the default config,
// from a counters table holding one row per (kernel, input, config).
inline CounterComparison compare_counters(const std::string& manifest_path, const std::string& predictions_path,
                                          const std::string& kernel) {
  const auto m = read_manifest(manifest_path);
  if (!m.default_config) throw Error(ErrorKind::kReport, manifest_path + " declares no default_config");
  const auto path = m.resolve(m.counters);
  const auto ct = text::read_table(path);
  const int ck = ct.column("kernel_id"), ci = ct.column("input_id"), cc = ct.column("config_id");
  if (ck < 0 || ci < 0 || cc < 0)
    throw Error(ErrorKind::kFormat, path.string() + ": counter comparison needs kernel_id,input_id,config_id columns");
  CounterComparison cmp;
  cmp.counters = m.aux_features ? *m.aux_features : default_counter_schema();
  std::vector<int> cols;
  for (const auto& n : cmp.counters) {
    const int c = ct.column(n);
    if (c < 0) throw Error(ErrorKind::kSchema, path.string() + ": no column '" + n + "'");
    cols.push_back(c);
  }
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> rows;
  for (std::size_t r = 0; r < ct.rows.size(); ++r) rows[{ct.rows[r][ck], ct.rows[r][ci], ct.rows[r][cc]}] = r;

  const auto pt = text::read_table(predictions_path);
  const int pk = pt.column("kernel_id"), pi = pt.column("input_id"), pc = pt.column("predicted_config");
  if (pk < 0 || pi < 0 || pc < 0)
    throw Error(ErrorKind::kFormat, predictions_path + ": header must contain kernel_id,input_id,predicted_config");
  cmp.mean_ratio.assign(cols.size(), 0.0);
  std::vector<std::size_t> counts(cols.size(), 0);
  for (const auto& row : pt.rows) {
    if (!kernel.empty() && row[pk] != kernel) continue;
    const auto d = rows.find({row[pk], row[pi], *m.default_config});
    const auto p = rows.find({row[pk], row[pi], row[pc]});
    if (d == rows.end() || p == rows.end()) continue;
    ++cmp.samples;
    for (std::size_t f = 0; f < cols.size(); ++f) {
      const double dv = detail::cell_value(ct, d->second, cols[f], path.string());
      const double pv = detail::cell_value(ct, p->second, cols[f], path.string());
      if (dv > 0) {
        cmp.mean_ratio[f] += pv / dv;
        ++counts[f];
      }
    }
  }
  if (cmp.samples == 0) throw Error(ErrorKind::kReport, "no prediction has counter rows for both configurations");
  for (std::size_t f = 0; f < cols.size(); ++f)
    cmp.mean_ratio[f] = counts[f] ? cmp.mean_ratio[f] / static_cast<double>(counts[f]) : 0.0;
  return cmp;
}

inline int cmd_report(const ReportArgs& a, Streams io) {
  const auto reports = read_fold_reports(a.reports);
  const fs::path out(a.out_dir);
  std::string protocol = "unknown";
  if (const auto prior = fs::path(a.reports) / "summary.json"; fs::exists(prior)) {
    try {
      protocol = json::parse(text::read_file(prior)).value("protocol", protocol);
    } catch (const json::exception&) {
    }
  }
  const auto summary = summarize(protocol, reports);
  text::write_file(out / "folds.csv", fold_table_csv(reports));
  text::write_file(out / "summary.json", summary.dump(2) + "\n");

  std::vector<std::string> names;
  plot::Series norm{"normalized speedup", {}, "#4477aa"};
  for (const auto& r : reports) {
    names.push_back(r.fold);
    norm.values.push_back(r.normalized_speedup);
  }
  text::write_file(out / "normalized_speedups.svg",
                   plot::bar_chart_svg("Normalized speedup per validation fold", names, {norm},
                                       "predicted / oracle geomean speedup", 1.0));

  json result = {{"folds", reports.size()}, {"summary", summary}, {"files", {"folds.csv", "summary.json", "normalized_speedups.svg"}}};
  if (!a.predictions.empty()) {
    if (a.manifest.empty()) throw Error(ErrorKind::kInput, "--predictions needs --manifest");
    const auto cmp = compare_counters(a.manifest, a.predictions, a.kernel);
    std::string csv = "counter,default,predicted\n";
    for (std::size_t f = 0; f < cmp.counters.size(); ++f)
      csv += cmp.counters[f] + ",1," + text::format_double(cmp.mean_ratio[f]) + "\n";
    text::write_file(out / "counter_comparison.csv", csv);
    const std::string title =
        "Counters, predicted vs default configuration" + (a.kernel.empty() ? std::string() : " (" + a.kernel + ")");
    text::write_file(out / "counter_comparison.svg",
                     plot::bar_chart_svg(title, cmp.counters,
                                         {{"default", std::vector<double>(cmp.counters.size(), 1.0), "#bbbbbb"},
                                          {"predicted", cmp.mean_ratio, "#ee6677"}},
                                         "normalized to default (lower is better)", 1.0));
    result["files"].push_back("counter_comparison.csv");
    result["files"].push_back("counter_comparison.svg");
    result["counter_comparison_samples"] = cmp.samples;
  }
  io.out << result.dump(2) << "\n";
  return 0;
}

// -- generate --------------------------------------------------------------

struct GenerateArgs {
  std::string out_dir, configs = "1,2,4,8", rule = "A";
  std::size_t kernels = 40, inputs = 10, vector_dim = 300, kernels_per_application = 2;
  std::uint64_t seed = 7;
  const CLI::Option* seed_flag = nullptr;
};

inline int cmd_generate(const GenerateArgs& a, Streams io) {
  synthetic::Spec spec;
  spec.n_kernels = a.kernels;
  spec.n_inputs = a.inputs;
  spec.vector_dim = a.vector_dim;
  spec.kernels_per_application = a.kernels_per_application;
  spec.rule = a.rule;
  spec.seed = detail::resolve_seed(a.seed_flag, a.seed, 7);
  spec.configs.clear();
  for (const auto& c : text::split(a.configs))
    if (!text::trim(c).empty()) spec.configs.emplace_back(text::trim(c));
  const auto files = synthetic::generate(spec);
  synthetic::write(files, a.out_dir);
  io.out << json{{"out_dir", a.out_dir},
                 {"manifest", (fs::path(a.out_dir) / "manifest.json").string()},
                 {"kernels", spec.n_kernels},
                 {"inputs", spec.n_inputs},
                 {"configs", spec.configs},
                 {"seed", spec.seed},
                 {"files", files.size()}}
                .dump(2)
         << "\n";
  return 0;
}

// -- scale-counters --------------------------------------------------------

struct ScaleArgs {
  std::string counters, arch_train, arch_target, out;
};

// Rescales the known counter columns of every row; other columns pass
// through untouched and empty cells stay empty.
inline int cmd_scale_counters(const ScaleArgs& a, Streams io) {
  const auto train_arch = read_arch_descriptor(a.arch_train);
  const auto target_arch = read_arch_descriptor(a.arch_target);
  auto t = text::read_table(a.counters);
  const int ck = t.column("kernel_id"), ci = t.column("input_id");
  if (ck < 0 || ci < 0) throw Error(ErrorKind::kFormat, a.counters + ": header must contain kernel_id,input_id");
  const auto& schema = default_counter_schema();
  std::vector<int> cols;
  for (const auto& n : schema) cols.push_back(t.column(n));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CounterRecord rec{t.rows[r][ck], t.rows[r][ci], {}};
    for (std::size_t f = 0; f < schema.size(); ++f)
      rec.counters[schema[f]] = cols[f] >= 0 && !t.rows[r][cols[f]].empty() ? detail::cell_value(t, r, cols[f], a.counters) : 0.0;
    const auto scaled = scale_counters_cross_arch(rec, train_arch, target_arch);
    for (std::size_t f = 0; f < schema.size(); ++f)
      if (cols[f] >= 0 && !t.rows[r][cols[f]].empty()) t.rows[r][cols[f]] = text::format_double(scaled.counters.at(schema[f]));
  }
  std::string csv = text::join(t.header, ",") + "\n";
  for (const auto& row : t.rows) csv += text::join(row, ",") + "\n";
  detail::emit(a.out, csv, io.out);
  return 0;
}

// -- entry point -----------------------------------------------------------

// Exit codes: 0 success, 1 runtime error, 2 usage error.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mga: multimodal graph autotuner for OpenMP configurations and device mapping", "mga"};
  app.require_subcommand(1);
  const std::string tasks = "omp_threads|omp_threads_sched_chunk|device_mapping";

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Load and validate a dataset manifest, print a summary");
  prepare->add_option("--manifest", prep.manifest, "Dataset manifest (JSON)")->required();
  prepare->add_option("--task", prep.task, "Task: " + tasks + " (default: manifest's task)");

  SelectArgs sel;
  auto* select = app.add_subcommand("select-counters", "Rank counters by |Pearson r| against runtime");
  select->add_option("--counters", sel.counters, "Counters table (CSV)")->required();
  select->add_option("--runtimes", sel.runtimes, "Runtime table (CSV)")->required();
  select->add_option("-k", sel.k, "Number of counters to keep")->capture_default_str();
  select->add_option("--config", sel.config, "Runtime config to join when the counters table has no config_id");
  select->add_option("--out", sel.out, "Output CSV (default: stdout)");

  TrainArgs tr;
  auto* trainc = app.add_subcommand("train", "Cross-validate and train a model bundle");
  trainc->add_option("--manifest", tr.manifest, "Dataset manifest (JSON)")->required();
  trainc->add_option("--task", tr.task, "Task: " + tasks);
  trainc->add_option("--protocol", tr.protocol, "Split protocol")
      ->check(CLI::IsMember(protocols()))
      ->capture_default_str();
  tr.seed_flag = trainc->add_option("--seed", tr.seed, "Seed (fallback: MGA_SEED, then 0)");
  trainc->add_option("--epochs", tr.epochs, "Override training epochs");
  trainc->add_option("--config", tr.config, "Hyperparameter overrides (JSON object)");
  trainc->add_option("--features", tr.features, "Feature set: all, static (graph+vector), dynamic (counters)")
      ->check(CLI::IsMember({"all", "static", "dynamic"}))
      ->capture_default_str();
  trainc->add_option("--arch-train", tr.arch_train, "Architecture descriptor of the training machine (JSON)");
  trainc->add_option("--jobs", tr.jobs, "Folds trained concurrently")->check(CLI::PositiveNumber)->capture_default_str();
  trainc->add_option("--out-dir", tr.out_dir, "Directory for fold reports")->capture_default_str();
  trainc->add_option("--bundle", tr.bundle, "Write a bundle trained on all samples here");
  trainc->add_flag("--allow-empty-classes", tr.allow_empty_classes, "Train even if a class has no training samples");
  trainc->add_flag("-v,--verbose", tr.verbose, "Log training progress to stderr");

  PredictArgs pr;
  auto* predictc = app.add_subcommand("predict", "Predict configurations for the samples of a manifest");
  predictc->add_option("--bundle", pr.bundle, "Model bundle")->required();
  predictc->add_option("--manifest", pr.manifest, "Manifest with graphs, vectors and counters")->required();
  predictc->add_option("--task", pr.task, "Task: " + tasks);
  predictc->add_option("--arch-train", pr.arch_train, "Training architecture descriptor (default: the bundle's)");
  predictc->add_option("--arch-target", pr.arch_target, "Target architecture descriptor; rescales counters");
  predictc->add_option("--out", pr.out, "Output CSV (default: stdout)");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Tables and plots from fold reports");
  report->add_option("reports", rep.reports, "Directory holding fold_*.json")->required();
  report->add_option("--out-dir", rep.out_dir, "Output directory")->required();
  report->add_option("--manifest", rep.manifest, "Manifest whose counters feed the counter comparison");
  report->add_option("--predictions", rep.predictions, "Predictions CSV from `mga predict`");
  report->add_option("--kernel", rep.kernel, "Restrict the counter comparison to one kernel");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset with a planted rule");
  generate->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  gen.seed_flag = generate->add_option("--seed", gen.seed, "Seed (fallback: MGA_SEED, then 7)");
  generate->add_option("--kernels", gen.kernels, "Number of kernels")->capture_default_str();
  generate->add_option("--inputs", gen.inputs, "Inputs per kernel")->capture_default_str();
  generate->add_option("--configs", gen.configs, "Comma-separated config ids, default last")->capture_default_str();
  generate->add_option("--vector-dim", gen.vector_dim, "Code vector dimension")->capture_default_str();
  generate->add_option("--kernels-per-app", gen.kernels_per_application, "Kernels per application")
      ->capture_default_str();
  generate->add_option("--rule", gen.rule, "Planted rule id")->capture_default_str();

  ScaleArgs sc;
  auto* scale = app.add_subcommand("scale-counters", "Rescale a counters table to another architecture");
  scale->add_option("--counters", sc.counters, "Counters table (CSV)")->required();
  scale->add_option("--arch-train", sc.arch_train, "Descriptor of the measuring machine")->required();
  scale->add_option("--arch-target", sc.arch_target, "Descriptor of the target machine")->required();
  scale->add_option("--out", sc.out, "Output CSV (default: stdout)");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const Streams io{out, err};
  try {
    if (*prepare) return cmd_prepare(prep, io);
    if (*select) return cmd_select_counters(sel, io);
    if (*trainc) return cmd_train(tr, io);
    if (*predictc) return cmd_predict(pr, io);
    if (*report) return cmd_report(rep, io);
    if (*generate) return cmd_generate(gen, io);
    if (*scale) return cmd_scale_counters(sc, io);
  } catch (const std::exception& e) {
    err << "mga: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args), out, err);
}

}  // namespace mga::cli
