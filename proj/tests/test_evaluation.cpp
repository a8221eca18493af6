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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "mga/evaluation.hpp"
#include "support.hpp"

namespace mga {
namespace {

using testing::catch_error;

// In-memory dataset: `kernels` x `inputs`, runtimes drawn from `rng`.
Dataset make_dataset(int kernels, int inputs, std::vector<std::string> configs, std::mt19937_64& rng,
                     int kernels_per_app = 1) {
  Dataset ds;
  ds.configs = ConfigSpace::from_ids(configs);
  ds.default_config = static_cast<int>(ds.configs.size() - 1);
  std::uniform_real_distribution<double> u(0.5, 5.0);
  for (int k = 0; k < kernels; ++k) {
    Kernel kern;
    kern.id = "k" + std::to_string(100 + k);
    kern.application_id = "app" + std::to_string(100 + k / kernels_per_app);
    ds.kernels.push_back(kern);
    for (int i = 0; i < inputs; ++i) {
      Sample s;
      s.kernel_id = kern.id;
      s.application_id = kern.application_id;
      s.input_id = "in" + std::to_string(10 + i);
      s.kernel = static_cast<std::size_t>(k);
      for (std::size_t c = 0; c < ds.configs.size(); ++c) s.runtimes.push_back(u(rng));
      s.label = oracle_label(s.runtimes);
      ds.samples.push_back(s);
    }
  }
  return ds;
}

std::vector<std::string> kernel_keys(const Dataset& ds) {
  std::vector<std::string> out;
  for (const auto& s : ds.samples) out.push_back(s.kernel_id);
  return out;
}

std::vector<std::size_t> all_ids(const Dataset& ds) {
  std::vector<std::size_t> ids(ds.samples.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

TEST(KfoldGrouped, TenKernelsFiveFolds) {
  std::vector<std::string> groups;
  for (int k = 0; k < 10; ++k) groups.push_back("k" + std::to_string(k));
  const auto plan = kfold_grouped(groups, 5, 1);
  ASSERT_EQ(plan.folds.size(), 5u);
  std::multiset<std::size_t> seen;
  for (const auto& f : plan.folds) {
    EXPECT_EQ(f.validation.size(), 2u);
    EXPECT_EQ(f.train.size(), 8u);
    seen.insert(f.validation.begin(), f.validation.end());
  }
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), 10u);
}

TEST(KfoldGrouped, RemainderRule) {
  std::vector<std::string> groups;
  for (int k = 0; k < 11; ++k) groups.push_back("k" + std::to_string(k));
  const auto plan = kfold_grouped(groups, 5, 2);
  std::vector<std::size_t> sizes;
  for (const auto& f : plan.folds) sizes.push_back(f.validation.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2, 2, 2}));
}

TEST(KfoldGrouped, DeterministicPerSeed) {
  std::mt19937_64 rng(1);
  const auto ds = make_dataset(12, 3, {"1", "2"}, rng);
  const auto keys = kernel_keys(ds);
  const auto a = kfold_grouped(keys, 5, 9), b = kfold_grouped(keys, 5, 9), c = kfold_grouped(keys, 5, 10);
  for (std::size_t f = 0; f < 5; ++f) EXPECT_EQ(a.folds[f].validation, b.folds[f].validation);
  bool differs = false;
  for (std::size_t f = 0; f < 5; ++f) differs |= a.folds[f].validation != c.folds[f].validation;
  EXPECT_TRUE(differs);
}

TEST(KfoldGrouped, RandomizedDisjointnessAndCoverage) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int kernels = 5 + trial;
    const auto ds = make_dataset(kernels, 1 + trial % 4, {"a", "b"}, rng);
    const auto plan = kfold_grouped(kernel_keys(ds), 5, static_cast<std::uint64_t>(trial));
    std::set<std::size_t> covered;
    for (const auto& f : plan.folds) {
      std::set<std::string> tk, vk;
      for (auto i : f.train) tk.insert(ds.samples[i].kernel_id);
      for (auto i : f.validation) vk.insert(ds.samples[i].kernel_id);
      for (const auto& k : vk) EXPECT_FALSE(tk.count(k));
      EXPECT_EQ(f.train.size() + f.validation.size(), ds.samples.size());
      covered.insert(f.validation.begin(), f.validation.end());
    }
    EXPECT_EQ(covered.size(), ds.samples.size());
  }
}

TEST(KfoldGrouped, TooFewGroups) {
  const std::vector<std::string> groups = {"a", "b"};
  EXPECT_EQ(catch_error([&] { kfold_grouped(groups, 5, 0); }).kind, ErrorKind::kSplit);
}

TEST(Loao, FoldPerApplication) {
  std::mt19937_64 rng(3);
  const auto ds = make_dataset(60, 2, {"1", "2"}, rng, 2);
  std::vector<std::string> apps;
  for (const auto& s : ds.samples) apps.push_back(s.application_id);
  const auto plan = leave_one_application_out(apps);
  EXPECT_EQ(plan.folds.size(), 30u);
  std::set<std::size_t> covered;
  for (const auto& f : plan.folds) {
    std::set<std::string> va;
    for (auto i : f.validation) va.insert(apps[i]);
    EXPECT_EQ(va.size(), 1u);
    EXPECT_EQ(va.count(f.name), 1u);
    covered.insert(f.validation.begin(), f.validation.end());
  }
  EXPECT_EQ(covered.size(), ds.samples.size());
}

TEST(Loao, TwoApplicationsAreComplementary) {
  const std::vector<std::string> apps = {"x", "y", "x", "y", "y"};
  const auto plan = leave_one_application_out(apps);
  ASSERT_EQ(plan.folds.size(), 2u);
  EXPECT_EQ(plan.folds[0].validation, plan.folds[1].train);
  EXPECT_EQ(plan.folds[1].validation, plan.folds[0].train);
}

TEST(Stratified, SixtyForty) {
  std::vector<int> labels(100);
  for (int i = 0; i < 100; ++i) labels[static_cast<std::size_t>(i)] = i < 60 ? 0 : 1;
  const auto plan = stratified_kfold(labels, 10, 4);
  for (const auto& f : plan.folds) {
    int zeros = 0, ones = 0;
    for (auto i : f.validation) (labels[i] == 0 ? zeros : ones)++;
    EXPECT_NEAR(zeros, 6, 1);
    EXPECT_NEAR(ones, 4, 1);
  }
}

TEST(Stratified, SingleLabelIsPlainPartition) {
  const std::vector<int> labels(23, 7);
  const auto plan = stratified_kfold(labels, 10, 5);
  std::set<std::size_t> covered;
  for (const auto& f : plan.folds) {
    EXPECT_GE(f.validation.size(), 2u);
    EXPECT_LE(f.validation.size(), 3u);
    covered.insert(f.validation.begin(), f.validation.end());
  }
  EXPECT_EQ(covered.size(), 23u);
}

TEST(Stratified, CountingOracleOnRandomLabels) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50 + static_cast<std::size_t>(trial) * 7, k = 10;
    std::uniform_int_distribution<int> cls(0, 2 + trial % 4);
    std::vector<int> labels(n);
    for (auto& l : labels) l = cls(rng);
    const auto plan = stratified_kfold(labels, k, static_cast<std::uint64_t>(trial));
    std::map<int, std::size_t> total;
    for (int l : labels) ++total[l];
    std::set<std::size_t> covered;
    for (const auto& f : plan.folds) {
      std::map<int, std::size_t> count;
      for (auto i : f.validation) ++count[labels[i]];
      for (const auto& [c, t] : total) {
        const double expected = static_cast<double>(t) / static_cast<double>(k);
        EXPECT_LE(std::abs(static_cast<double>(count[c]) - expected), 1.0);
      }
      covered.insert(f.validation.begin(), f.validation.end());
    }
    EXPECT_EQ(covered.size(), n);
  }
}

TEST(Stratified, WarnsOnRareClass) {
  std::vector<int> labels(30, 0);
  labels[3] = 1;
  EXPECT_FALSE(stratified_kfold(labels, 10, 0).warnings.empty());
}

TEST(Holdout, Examples) {
  std::vector<std::string> inputs;
  for (int i = 0; i < 30; ++i) inputs.push_back("in" + std::to_string(i));
  const auto h = holdout_inputs(inputs, 0.2, 3);
  EXPECT_EQ(h.held_out.size(), 6u);
  EXPECT_EQ(h.train.size(), 24u);
  EXPECT_EQ(holdout_inputs(inputs, 0.2, 3).held_out, h.held_out);
  const std::vector<std::string> five = {"a", "b", "c", "d", "e"};
  EXPECT_EQ(holdout_inputs(five, 0.2, 1).held_out.size(), 1u);
  EXPECT_EQ(catch_error([&] { holdout_inputs(five, 0.01, 1); }).kind, ErrorKind::kSplit);
}

TEST(UnseenInputs, ValidationOnlyHeldOutPairs) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ds = make_dataset(10 + trial, 10, {"1", "2", "4"}, rng);
    const std::uint64_t seed = static_cast<std::uint64_t>(trial) * 31;
    const auto plan = unseen_inputs_plan(ds, 5, 0.2, seed);
    std::vector<std::string> inputs;
    for (const auto& s : ds.samples) inputs.push_back(s.input_id);
    const auto hold = holdout_inputs(inputs, 0.2, seed);
    const std::set<std::string> held(hold.held_out.begin(), hold.held_out.end());
    const auto base = kfold_grouped(kernel_keys(ds), 5, seed);
    bool differs_from_base = false;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      const auto& fold = plan.folds[f];
      ASSERT_FALSE(fold.validation.empty());
      std::set<std::string> train_kernels;
      for (auto i : fold.train) {
        EXPECT_FALSE(held.count(ds.samples[i].input_id));
        train_kernels.insert(ds.samples[i].kernel_id);
      }
      for (auto i : fold.validation) {
        EXPECT_TRUE(held.count(ds.samples[i].input_id));
        EXPECT_FALSE(train_kernels.count(ds.samples[i].kernel_id));
      }
      std::set<std::string> vk, bk;
      for (auto i : fold.validation) vk.insert(ds.samples[i].kernel_id);
      for (auto i : base.folds[f].validation) bk.insert(ds.samples[i].kernel_id);
      differs_from_base |= vk != bk;
    }
    EXPECT_TRUE(differs_from_base);
  }
}

TEST(Metrics, SpeedupExamples) {
  const RuntimeRow row = {10.0, 4.0, 6.0};
  EXPECT_EQ(speedup(row, 1, 0), 2.5);
  EXPECT_EQ(speedup(row, 0, 0), 1.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 9.0);
  for (int t = 0; t < 50; ++t) {
    RuntimeRow r(12);
    for (auto& x : r) x = u(rng);
    const int oracle = oracle_label(r);
    double best = 0;
    for (int c = 0; c < 12; ++c) best = std::max(best, speedup(r, c, 11));
    EXPECT_EQ(speedup(r, oracle, 11), best);
  }
  EXPECT_EQ(catch_error([&] { speedup({1.0, std::nullopt}, 1, 0); }).kind, ErrorKind::kMetric);
}

TEST(Metrics, GeomeanExamples) {
  const std::vector<double> a = {2, 8}, b = {3.7};
  EXPECT_DOUBLE_EQ(geomean(a), 4.0);
  EXPECT_NEAR(geomean(b), 3.7, 1e-12);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  std::vector<double> v(100);
  for (auto& x : v) x = u(rng);
  const double ref = testing::oracle::geomean(v);
  EXPECT_LE(std::abs(geomean(v) - ref) / ref, 1e-12);
  const std::vector<double> bad = {1.0, 0.0};
  EXPECT_EQ(catch_error([&] { geomean(bad); }).kind, ErrorKind::kMetric);
}

TEST(Metrics, AccuracyAndF1) {
  const std::vector<int> pred = {0, 1, 1, 2, 0, 2}, truth = {0, 1, 2, 2, 1, 2};
  EXPECT_DOUBLE_EQ(accuracy(pred, truth), 4.0 / 6.0);
  // class 0: tp1 fp1 fn0 -> 2/3; class 1: tp1 fp1 fn1 -> 1/2; class 2: tp2 fp0 fn1 -> 4/5
  EXPECT_DOUBLE_EQ(f1_for_class(pred, truth, 0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(f1_for_class(pred, truth, 1), 0.5);
  EXPECT_DOUBLE_EQ(f1_for_class(pred, truth, 2), 0.8);
  EXPECT_DOUBLE_EQ(macro_f1(pred, truth), (2.0 / 3.0 + 0.5 + 0.8) / 3.0);
}

TEST(StaticMapping, Examples) {
  Dataset ds;
  ds.configs = ConfigSpace::from_ids({"CPU", "GPU"});
  ds.samples.resize(2);
  ds.samples[0].runtimes = {60.0, 30.0};
  ds.samples[1].runtimes = {40.0, 50.0};
  const std::vector<std::size_t> ids = {0, 1};
  EXPECT_EQ(ds.configs.id(static_cast<std::size_t>(static_mapping_baseline(ds, ids))), "GPU");
  ds.samples[1].runtimes = {40.0, 70.0};
  EXPECT_EQ(static_mapping_baseline(ds, ids), 0);
}

TEST(StaticMapping, BruteForceTotals) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 20; ++t) {
    const auto ds = make_dataset(6, 5, {"CPU", "GPU"}, rng);
    double cpu = 0, gpu = 0;
    for (const auto& s : ds.samples) {
      cpu += *s.runtimes[0];
      gpu += *s.runtimes[1];
    }
    EXPECT_EQ(static_mapping_baseline(ds, all_ids(ds)), gpu < cpu ? 1 : 0);
  }
}

TEST(FoldReport, OracleAndDefaultPredictions) {
  std::mt19937_64 rng(11);
  const auto ds = make_dataset(8, 5, {"1", "2", "4", "8"}, rng);
  const auto ids = all_ids(ds);
  std::vector<int> oracle, dflt;
  for (auto i : ids) {
    oracle.push_back(ds.samples[i].label);
    dflt.push_back(*ds.default_config);
  }
  const auto r = fold_report(ds, "f", ids, oracle, *ds.default_config);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.normalized_speedup, 1.0);
  EXPECT_GE(r.oracle_geomean_speedup, 1.0);
  const auto d = fold_report(ds, "f", ids, dflt, *ds.default_config);
  EXPECT_EQ(d.geomean_speedup, 1.0);
  EXPECT_EQ(d.sample_geomean_speedup, 1.0);
}

TEST(FoldReport, MatchesHandRolledOracleAndIsOrderInvariant) {
  std::mt19937_64 rng(12);
  const auto ds = make_dataset(7, 6, {"1", "2", "4"}, rng);
  auto ids = all_ids(ds);
  std::uniform_int_distribution<int> pick(0, 2);
  std::vector<int> preds;
  for (std::size_t i = 0; i < ids.size(); ++i) preds.push_back(pick(rng));
  const auto r = fold_report(ds, "f", ids, preds, 2);

  std::map<std::string, std::vector<double>> loops, loops_oracle;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& s = ds.samples[ids[i]];
    std::vector<double> rt;
    for (const auto& x : s.runtimes) rt.push_back(*x);
    loops[s.kernel_id].push_back(rt[2] / rt[static_cast<std::size_t>(preds[i])]);
    loops_oracle[s.kernel_id].push_back(rt[2] / rt[static_cast<std::size_t>(testing::oracle::argmin(rt))]);
    hits += preds[i] == testing::oracle::argmin(rt);
  }
  std::vector<double> per_loop, per_loop_oracle;
  for (const auto& [k, v] : loops) per_loop.push_back(testing::oracle::geomean(v));
  for (const auto& [k, v] : loops_oracle) per_loop_oracle.push_back(testing::oracle::geomean(v));
  const double gm = testing::oracle::geomean(per_loop), gmo = testing::oracle::geomean(per_loop_oracle);
  EXPECT_DOUBLE_EQ(r.accuracy, static_cast<double>(hits) / static_cast<double>(ids.size()));
  EXPECT_NEAR(r.geomean_speedup, gm, 1e-12 * gm);
  EXPECT_NEAR(r.oracle_geomean_speedup, gmo, 1e-12 * gmo);
  EXPECT_NEAR(r.normalized_speedup, gm / gmo, 1e-12);
  EXPECT_GE(r.oracle_geomean_speedup, r.geomean_speedup);
  EXPECT_GT(r.normalized_speedup, 0.0);
  EXPECT_LE(r.normalized_speedup, 1.0);

  // Shuffle the sample order within the fold.
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> ids2;
  std::vector<int> preds2;
  for (auto o : order) {
    ids2.push_back(ids[o]);
    preds2.push_back(preds[o]);
  }
  const auto r2 = fold_report(ds, "f", ids2, preds2, 2);
  EXPECT_EQ(r2.accuracy, r.accuracy);
  EXPECT_EQ(r2.f1, r.f1);
  EXPECT_NEAR(r2.geomean_speedup, r.geomean_speedup, 1e-14);
  EXPECT_NEAR(r2.normalized_speedup, r.normalized_speedup, 1e-14);
}

TEST(FoldReport, BinaryF1AndJsonRoundTrip) {
  std::mt19937_64 rng(13);
  const auto ds = make_dataset(4, 4, {"CPU", "GPU"}, rng);
  const auto ids = all_ids(ds);
  std::vector<int> preds(ids.size(), 1);
  const auto r = fold_report(ds, "f", ids, preds, 0, 1);
  EXPECT_EQ(r.f1_kind, "binary:GPU");
  const auto back = fold_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(to_json(back), to_json(r));
}

TEST(FoldReport, MissingPredictionsAreReported) {
  std::mt19937_64 rng(14);
  const auto ds = make_dataset(2, 2, {"1", "2"}, rng);
  const auto ids = all_ids(ds);
  const std::vector<int> preds = {0};
  const auto c = catch_error([&] { fold_report(ds, "f", ids, preds, 1); });
  EXPECT_EQ(c.kind, ErrorKind::kReport);
  EXPECT_NE(c.what.find("1, 2, 3"), std::string::npos);
}

}  // namespace
}  // namespace mga
