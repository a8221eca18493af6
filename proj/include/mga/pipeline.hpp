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
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "mga/dataset.hpp"
#include "mga/dataset_io.hpp"
#include "mga/error.hpp"
#include "mga/evaluation.hpp"
#include "mga/model.hpp"
#include "mga/text.hpp"

namespace mga {

enum class Task { kOmpThreads, kOmpThreadsSchedChunk, kDeviceMapping };

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::kOmpThreads: return "omp_threads";
    case Task::kOmpThreadsSchedChunk: return "omp_threads_sched_chunk";
    case Task::kDeviceMapping: return "device_mapping";
  }
  return "?";
}

inline std::optional<Task> parse_task(std::string_view s) {
  if (s == "omp_threads") return Task::kOmpThreads;
  if (s == "omp_threads_sched_chunk") return Task::kOmpThreadsSchedChunk;
  if (s == "device_mapping") return Task::kDeviceMapping;
  return std::nullopt;
}

inline const std::vector<std::string>& protocols() {
  static const std::vector<std::string> p = {"kfold5", "loao", "stratified10", "unseen-inputs", "none"};
  return p;
}

// Loads a manifest for `task`; the task picks the default aux schema and,
// for the joint OpenMP task, the declared config space.
inline Dataset load_for_task(const std::filesystem::path& manifest, std::optional<Task> task,
                             const LoadOptions& opts = {}) {
  auto m = read_manifest(manifest);
  if (task) m.task = std::string(to_string(*task));
  return load_dataset(m, opts);
}

inline SplitPlan make_plan(const Dataset& ds, const std::string& protocol, std::uint64_t seed) {
  std::vector<std::string> kernels, apps;
  std::vector<int> labels;
  for (const auto& s : ds.samples) {
    kernels.push_back(s.kernel_id);
    apps.push_back(s.application_id);
    labels.push_back(s.label);
  }
  if (protocol == "kfold5") return kfold_grouped(kernels, 5, seed);
  if (protocol == "loao") return leave_one_application_out(apps);
  if (protocol == "stratified10") return stratified_kfold(labels, 10, seed);
  if (protocol == "unseen-inputs") return unseen_inputs_plan(ds, 5, 0.2, seed);
  if (protocol == "none") return SplitPlan{"none", {}, {}};
  throw Error(ErrorKind::kSplit, "unknown protocol '" + protocol + "'");
}

// F1 positive class for device mapping: the config named GPU, if any.
inline std::optional<int> positive_class_for(const Dataset& ds, Task task) {
  if (task != Task::kDeviceMapping) return std::nullopt;
  for (std::size_t i = 0; i < ds.configs.size(); ++i) {
    auto id = ds.configs.id(i);
    std::transform(id.begin(), id.end(), id.begin(), [](unsigned char c) { return std::toupper(c); });
    if (id == "GPU") return static_cast<int>(i);
  }
  return std::nullopt;
}

struct FoldResult {
  FoldReport report;
  TrainingLog log;
};

struct CrossValidationOptions {
  int jobs = 1;
  std::optional<int> positive_class;
  TrainOptions train;
};

inline FoldResult run_fold(const Dataset& ds, const Fold& fold, const Hyperparams& hp, std::uint64_t seed,
                           const CrossValidationOptions& opts) {
  if (fold.train.empty() || fold.validation.empty())
    throw Error(ErrorKind::kSplit, "fold '" + fold.name + "' has an empty side");
  const auto bundle = train(ds, fold.train, fold.validation, hp, seed, opts.train);
  std::vector<int> preds;
  preds.reserve(fold.validation.size());
  for (auto id : fold.validation) preds.push_back(predict(bundle, ds, ds.samples[id]).config);
  const int baseline = ds.default_config ? *ds.default_config : static_mapping_baseline(ds, fold.train);
  return {fold_report(ds, fold.name, fold.validation, preds, baseline, opts.positive_class), bundle.log};
}

// Trains and evaluates every fold. Fold f is seeded with derive_seed(seed, f),
// so results do not depend on `jobs`.
inline std::vector<FoldResult> cross_validate(const Dataset& ds, const SplitPlan& plan, const Hyperparams& hp,
                                              std::uint64_t seed, const CrossValidationOptions& opts = {}) {
  std::vector<std::optional<FoldResult>> results(plan.folds.size());
  std::vector<std::exception_ptr> errors(plan.folds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f; (f = next++) < plan.folds.size();) {
      try {
        results[f] = run_fold(ds, plan.folds[f], hp, nn::derive_seed(seed, f), opts);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const auto jobs = static_cast<std::size_t>(std::max(1, opts.jobs));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < std::min(jobs, plan.folds.size()); ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<FoldResult> out;
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

inline nlohmann::json summarize(const std::string& protocol, const std::vector<FoldReport>& reports) {
  if (reports.empty()) throw Error(ErrorKind::kReport, "no fold reports");
  std::vector<double> acc, norm, speed;
  double f1 = 0, acc_sum = 0;
  std::size_t hits = 0, total = 0;
  for (const auto& r : reports) {
    acc.push_back(r.accuracy);
    norm.push_back(r.normalized_speedup);
    speed.push_back(r.geomean_speedup);
    f1 += r.f1;
    acc_sum += r.accuracy;
    for (const auto& o : r.outcomes) hits += o.predicted == o.oracle;
    total += r.outcomes.size();
  }
  const double n = static_cast<double>(reports.size());
  const bool all_positive = std::all_of(acc.begin(), acc.end(), [](double a) { return a > 0; });
  return {{"protocol", protocol},
          {"folds", reports.size()},
          {"mean_accuracy", acc_sum / n},
          {"geomean_accuracy", all_positive ? nlohmann::json(geomean(acc)) : nlohmann::json(nullptr)},
          {"pooled_accuracy", static_cast<double>(hits) / static_cast<double>(total)},
          {"mean_f1", f1 / n},
          {"geomean_speedup", geomean(speed)},
          {"geomean_normalized_speedup", geomean(norm)},
          {"min_normalized_speedup", *std::min_element(norm.begin(), norm.end())}};
}

inline std::string fold_table_csv(const std::vector<FoldReport>& reports) {
  std::string out =
      "fold,samples,accuracy,f1,geomean_speedup,oracle_geomean_speedup,normalized_speedup,"
      "sample_geomean_speedup,sample_oracle_geomean_speedup\n";
  for (const auto& r : reports) {
    out += r.fold + "," + std::to_string(r.samples) + "," + text::format_double(r.accuracy) + "," +
           text::format_double(r.f1) + "," + text::format_double(r.geomean_speedup) + "," +
           text::format_double(r.oracle_geomean_speedup) + "," + text::format_double(r.normalized_speedup) + "," +
           text::format_double(r.sample_geomean_speedup) + "," +
           text::format_double(r.sample_oracle_geomean_speedup) + "\n";
  }
  return out;
}

inline std::string training_curve_csv(const TrainingLog& log) {
  std::string out = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  auto num = [](double v) { return std::isnan(v) ? std::string() : text::format_double(v); };
  for (const auto& e : log.epochs)
    out += std::to_string(e.epoch) + "," + num(e.train_loss) + "," + num(e.train_accuracy) + "," + num(e.val_loss) +
           "," + num(e.val_accuracy) + "\n";
  return out;
}

inline void write_fold_results(const std::filesystem::path& dir, const std::string& protocol,
                               const std::vector<FoldResult>& results) {
  std::vector<FoldReport> reports;
  for (const auto& r : results) {
    text::write_file(dir / ("fold_" + r.report.fold + ".json"), to_json(r.report).dump(2) + "\n");
    text::write_file(dir / ("fold_" + r.report.fold + "_training.csv"), training_curve_csv(r.log));
    reports.push_back(r.report);
  }
  text::write_file(dir / "folds.csv", fold_table_csv(reports));
  text::write_file(dir / "summary.json", summarize(protocol, reports).dump(2) + "\n");
}

inline std::vector<FoldReport> read_fold_reports(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::kReport, "'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("fold_", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<FoldReport> out;
  for (const auto& f : files) {
    try {
      out.push_back(fold_report_from_json(nlohmann::json::parse(text::read_file(f))));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kReport, f.string() + ": " + e.what());
    }
  }
  if (out.empty()) throw Error(ErrorKind::kReport, "no fold reports in '" + dir.string() + "'");
  return out;
}

}  // namespace mga
