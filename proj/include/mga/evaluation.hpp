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
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mga/dataset.hpp"
#include "mga/error.hpp"
#include "mga/text.hpp"

namespace mga {

// ---------------------------------------------------------------------------
// Split protocols
// ---------------------------------------------------------------------------

struct Fold {
  std::string name;
  std::vector<std::size_t> train;       // sample ids
  std::vector<std::size_t> validation;  // sample ids
};

struct SplitPlan {
  std::string protocol;
  std::vector<Fold> folds;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string> distinct(std::span<const std::string> keys) {
  std::set<std::string> s(keys.begin(), keys.end());
  return {s.begin(), s.end()};
}

// Folds whose validation sets are the samples of the given group sets.
inline SplitPlan plan_from_groups(std::string protocol, std::span<const std::string> sample_groups,
                                  const std::vector<std::vector<std::string>>& fold_groups,
                                  const std::vector<std::string>& names) {
  SplitPlan plan;
  plan.protocol = std::move(protocol);
  for (std::size_t f = 0; f < fold_groups.size(); ++f) {
    const std::set<std::string> val(fold_groups[f].begin(), fold_groups[f].end());
    Fold fold;
    fold.name = names[f];
    for (std::size_t i = 0; i < sample_groups.size(); ++i)
      (val.count(sample_groups[i]) ? fold.validation : fold.train).push_back(i);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

}  // namespace detail

// Groups are shuffled by `seed` and dealt into k contiguous chunks; the first
// (groups mod k) folds take one extra group.
inline std::vector<std::vector<std::string>> partition_groups(std::vector<std::string> groups, std::size_t k,
                                                              std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::kSplit, "k must be at least 2");
  if (groups.size() < k)
    throw Error(ErrorKind::kSplit, "cannot form " + std::to_string(k) + " folds from " +
                                       std::to_string(groups.size()) + " groups");
  std::mt19937_64 rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);
  std::vector<std::vector<std::string>> folds(k);
  const std::size_t base = groups.size() / k, extra = groups.size() % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t n = base + (f < extra ? 1 : 0);
    folds[f].assign(groups.begin() + static_cast<std::ptrdiff_t>(pos),
                    groups.begin() + static_cast<std::ptrdiff_t>(pos + n));
    std::sort(folds[f].begin(), folds[f].end());
    pos += n;
  }
  return folds;
}

// `sample_groups[i]` is the grouping key (kernel id) of sample i.
inline SplitPlan kfold_grouped(std::span<const std::string> sample_groups, std::size_t k = 5,
                               std::uint64_t seed = 0) {
  const auto folds = partition_groups(detail::distinct(sample_groups), k, seed);
  std::vector<std::string> names;
  for (std::size_t f = 0; f < k; ++f) names.push_back("fold" + std::to_string(f));
  return detail::plan_from_groups("kfold" + std::to_string(k), sample_groups, folds, names);
}

inline SplitPlan leave_one_application_out(std::span<const std::string> sample_apps) {
  const auto apps = detail::distinct(sample_apps);
  if (apps.size() < 2) throw Error(ErrorKind::kSplit, "leave-one-application-out needs at least 2 applications");
  std::vector<std::vector<std::string>> folds;
  for (const auto& a : apps) folds.push_back({a});
  return detail::plan_from_groups("loao", sample_apps, folds, apps);
}

// Each class is shuffled and dealt round-robin, continuing from where the
// previous class stopped, so every fold holds floor or ceil of n_c / k
// members of class c and fold sizes differ by at most one.
inline SplitPlan stratified_kfold(std::span<const int> labels, std::size_t k = 10, std::uint64_t seed = 0) {
  if (k < 2) throw Error(ErrorKind::kSplit, "k must be at least 2");
  if (labels.size() < k)
    throw Error(ErrorKind::kSplit, "cannot form " + std::to_string(k) + " folds from " +
                                       std::to_string(labels.size()) + " samples");
  SplitPlan plan;
  plan.protocol = "stratified" + std::to_string(k);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> val(k);
  std::size_t offset = 0;
  for (auto& [label, members] : by_class) {
    if (members.size() < k)
      plan.warnings.push_back("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                              " members, fewer than " + std::to_string(k) + " folds");
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t j = 0; j < members.size(); ++j) val[(offset + j) % k].push_back(members[j]);
    offset += members.size();
  }
  for (std::size_t f = 0; f < k; ++f) {
    Fold fold;
    fold.name = "fold" + std::to_string(f);
    std::sort(val[f].begin(), val[f].end());
    fold.validation = val[f];
    const std::set<std::size_t> v(val[f].begin(), val[f].end());
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!v.count(i)) fold.train.push_back(i);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

struct InputHoldout {
  std::vector<std::string> train;
  std::vector<std::string> held_out;
};

inline InputHoldout holdout_inputs(std::span<const std::string> input_ids, double fraction = 0.2,
                                   std::uint64_t seed = 0) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error(ErrorKind::kSplit, "holdout fraction must lie in (0, 1)");
  auto inputs = detail::distinct(input_ids);
  const auto n_hold = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(inputs.size())));
  if (n_hold == 0 || n_hold >= inputs.size())
    throw Error(ErrorKind::kSplit, "holdout fraction " + text::format_double(fraction) + " of " +
                                       std::to_string(inputs.size()) + " inputs leaves an empty side");
  std::mt19937_64 rng(seed);
  std::shuffle(inputs.begin(), inputs.end(), rng);
  InputHoldout out;
  out.held_out.assign(inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(n_hold));
  out.train.assign(inputs.begin() + static_cast<std::ptrdiff_t>(n_hold), inputs.end());
  std::sort(out.held_out.begin(), out.held_out.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

// Grouped k-fold over kernels crossed with an input holdout: a fold trains on
// its training kernels x training inputs and validates on unseen kernels x
// held-out inputs. Kernel folds use a seed distinct from the plain k-fold.
inline SplitPlan unseen_inputs_plan(const Dataset& ds, std::size_t k = 5, double fraction = 0.2,
                                    std::uint64_t seed = 0) {
  std::vector<std::string> kernels, inputs;
  for (const auto& s : ds.samples) {
    kernels.push_back(s.kernel_id);
    inputs.push_back(s.input_id);
  }
  const auto kernel_folds = partition_groups(detail::distinct(kernels), k, seed ^ 0x5eedf01d5ULL);
  const auto hold = holdout_inputs(inputs, fraction, seed);
  const std::set<std::string> held(hold.held_out.begin(), hold.held_out.end());
  SplitPlan plan;
  plan.protocol = "unseen-inputs";
  for (std::size_t f = 0; f < k; ++f) {
    const std::set<std::string> val(kernel_folds[f].begin(), kernel_folds[f].end());
    Fold fold;
    fold.name = "fold" + std::to_string(f);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      const bool vk = val.count(ds.samples[i].kernel_id) > 0;
      const bool hi = held.count(ds.samples[i].input_id) > 0;
      if (vk && hi) fold.validation.push_back(i);
      else if (!vk && !hi) fold.train.push_back(i);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline double runtime_of(const RuntimeRow& row, int config) {
  if (config < 0 || static_cast<std::size_t>(config) >= row.size() || !row[static_cast<std::size_t>(config)])
    throw Error(ErrorKind::kMetric, "config " + std::to_string(config) + " has no runtime in this row");
  return *row[static_cast<std::size_t>(config)];
}

// runtime(default) / runtime(predicted).
inline double speedup(const RuntimeRow& row, int predicted, int default_config) {
  return runtime_of(row, default_config) / runtime_of(row, predicted);
}

inline double geomean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::kMetric, "geometric mean of no values");
  double s = 0.0;
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::kMetric, "geometric mean needs positive values");
    s += std::log(v);
  }
  return std::exp(s / static_cast<double>(values.size()));
}

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty())
    throw Error(ErrorKind::kMetric, "accuracy needs equally sized, non-empty inputs");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

inline double f1_for_class(std::span<const int> predicted, std::span<const int> truth, int cls) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == cls && truth[i] == cls) ++tp;
    else if (predicted[i] == cls) ++fp;
    else if (truth[i] == cls) ++fn;
  }
  if (tp + fp + fn == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

// Unweighted mean of per-class F1 over classes present in truth or predictions.
inline double macro_f1(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty())
    throw Error(ErrorKind::kMetric, "F1 needs equally sized, non-empty inputs");
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(predicted.begin(), predicted.end());
  double s = 0.0;
  for (int c : classes) s += f1_for_class(predicted, truth, c);
  return s / static_cast<double>(classes.size());
}

// Device whose total runtime over `ids` is smallest; lower index wins ties.
inline int static_mapping_baseline(const Dataset& ds, std::span<const std::size_t> ids) {
  if (ids.empty()) throw Error(ErrorKind::kBaseline, "no samples to derive a static mapping from");
  std::vector<double> totals(ds.configs.size(), 0.0);
  for (auto id : ids) {
    const auto& s = ds.samples.at(id);
    if (s.runtimes.size() != ds.configs.size())
      throw Error(ErrorKind::kBaseline, "sample " + s.kernel_id + "/" + s.input_id + " has no runtimes");
    for (std::size_t c = 0; c < totals.size(); ++c) {
      if (!s.runtimes[c])
        throw Error(ErrorKind::kBaseline, "sample " + s.kernel_id + "/" + s.input_id + " lacks a runtime for '" +
                                              ds.configs.id(c) + "'");
      totals[c] += *s.runtimes[c];
    }
  }
  return static_cast<int>(std::min_element(totals.begin(), totals.end()) - totals.begin());
}

struct SampleOutcome {
  std::size_t sample = 0;
  std::string kernel_id, input_id;
  int predicted = -1, oracle = -1;
  double speedup = 0, oracle_speedup = 0;
};

struct FoldReport {
  std::string fold;
  std::size_t samples = 0;
  double accuracy = 0;
  double f1 = 0;
  std::string f1_kind;  // "macro" or "binary:<positive class>"
  int baseline_config = -1;
  std::vector<SampleOutcome> outcomes;
  std::map<std::string, double> loop_speedups;  // kernel -> geomean over its inputs
  std::map<std::string, double> loop_oracle_speedups;
  double geomean_speedup = 0;  // geomean over loops
  double oracle_geomean_speedup = 0;
  double normalized_speedup = 0;
  double sample_geomean_speedup = 0;  // geomean over all samples
  double sample_oracle_geomean_speedup = 0;
};

// `predictions[i]` belongs to sample `validation[i]`. Speedups are relative to
// `baseline_config`. With `positive_class` set, F1 is the binary score of that
// class; otherwise it is macro-averaged.
inline FoldReport fold_report(const Dataset& ds, const std::string& fold_name, std::span<const std::size_t> validation,
                              std::span<const int> predictions, int baseline_config,
                              std::optional<int> positive_class = std::nullopt) {
  if (predictions.size() != validation.size()) {
    std::vector<std::string> missing;
    for (std::size_t i = predictions.size(); i < validation.size(); ++i)
      missing.push_back(std::to_string(validation[i]));
    throw Error(ErrorKind::kReport, "missing predictions for samples: " + text::join(missing, ", "));
  }
  if (validation.empty()) throw Error(ErrorKind::kReport, "fold '" + fold_name + "' has no validation samples");
  FoldReport r;
  r.fold = fold_name;
  r.samples = validation.size();
  r.baseline_config = baseline_config;
  std::vector<int> truth;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_loop;
  std::vector<double> all, all_oracle;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    const auto& s = ds.samples.at(validation[i]);
    if (s.label < 0) throw Error(ErrorKind::kReport, "sample " + s.kernel_id + "/" + s.input_id + " has no label");
    SampleOutcome o{validation[i], s.kernel_id, s.input_id, predictions[i], s.label,
                    speedup(s.runtimes, predictions[i], baseline_config),
                    speedup(s.runtimes, s.label, baseline_config)};
    truth.push_back(s.label);
    per_loop[s.kernel_id].first.push_back(o.speedup);
    per_loop[s.kernel_id].second.push_back(o.oracle_speedup);
    all.push_back(o.speedup);
    all_oracle.push_back(o.oracle_speedup);
    r.outcomes.push_back(std::move(o));
  }
  r.accuracy = accuracy(predictions, truth);
  if (positive_class) {
    r.f1 = f1_for_class(predictions, truth, *positive_class);
    r.f1_kind = "binary:" + ds.configs.id(static_cast<std::size_t>(*positive_class));
  } else {
    r.f1 = macro_f1(predictions, truth);
    r.f1_kind = "macro";
  }
  std::vector<double> loops, loops_oracle;
  for (const auto& [kernel, v] : per_loop) {
    r.loop_speedups[kernel] = geomean(v.first);
    r.loop_oracle_speedups[kernel] = geomean(v.second);
    loops.push_back(r.loop_speedups[kernel]);
    loops_oracle.push_back(r.loop_oracle_speedups[kernel]);
  }
  r.geomean_speedup = geomean(loops);
  r.oracle_geomean_speedup = geomean(loops_oracle);
  r.normalized_speedup = r.geomean_speedup / r.oracle_geomean_speedup;
  r.sample_geomean_speedup = geomean(all);
  r.sample_oracle_geomean_speedup = geomean(all_oracle);
  return r;
}

inline nlohmann::json to_json(const FoldReport& r) {
  nlohmann::json outcomes = nlohmann::json::array();
  for (const auto& o : r.outcomes)
    outcomes.push_back({{"sample", o.sample},
                        {"kernel_id", o.kernel_id},
                        {"input_id", o.input_id},
                        {"predicted", o.predicted},
                        {"oracle", o.oracle},
                        {"speedup", o.speedup},
                        {"oracle_speedup", o.oracle_speedup}});
  return {{"fold", r.fold},
          {"samples", r.samples},
          {"accuracy", r.accuracy},
          {"f1", r.f1},
          {"f1_kind", r.f1_kind},
          {"baseline_config", r.baseline_config},
          {"geomean_speedup", r.geomean_speedup},
          {"oracle_geomean_speedup", r.oracle_geomean_speedup},
          {"normalized_speedup", r.normalized_speedup},
          {"sample_geomean_speedup", r.sample_geomean_speedup},
          {"sample_oracle_geomean_speedup", r.sample_oracle_geomean_speedup},
          {"loop_speedups", r.loop_speedups},
          {"loop_oracle_speedups", r.loop_oracle_speedups},
          {"outcomes", outcomes}};
}

inline FoldReport fold_report_from_json(const nlohmann::json& j) {
  try {
    FoldReport r;
    r.fold = j.at("fold").get<std::string>();
    r.samples = j.at("samples").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.f1_kind = j.at("f1_kind").get<std::string>();
    r.baseline_config = j.at("baseline_config").get<int>();
    r.geomean_speedup = j.at("geomean_speedup").get<double>();
    r.oracle_geomean_speedup = j.at("oracle_geomean_speedup").get<double>();
    r.normalized_speedup = j.at("normalized_speedup").get<double>();
    r.sample_geomean_speedup = j.at("sample_geomean_speedup").get<double>();
    r.sample_oracle_geomean_speedup = j.at("sample_oracle_geomean_speedup").get<double>();
    r.loop_speedups = j.at("loop_speedups").get<std::map<std::string, double>>();
    r.loop_oracle_speedups = j.at("loop_oracle_speedups").get<std::map<std::string, double>>();
    for (const auto& o : j.at("outcomes"))
      r.outcomes.push_back({o.at("sample").get<std::size_t>(), o.at("kernel_id").get<std::string>(),
                            o.at("input_id").get<std::string>(), o.at("predicted").get<int>(),
                            o.at("oracle").get<int>(), o.at("speedup").get<double>(),
                            o.at("oracle_speedup").get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kReport, std::string("fold report: ") + e.what());
  }
}

}  // namespace mga
