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
#include <map>
#include <numeric>
#include <set>

#include "mga/dataset_io.hpp"
#include "mga/model.hpp"
#include "mga/synthetic.hpp"
#include "support.hpp"

namespace mga {
namespace {

using testing::catch_error;

Dataset load(const synthetic::Spec& spec, const testing::TempDir& dir) {
  synthetic::write(synthetic::generate(spec), dir.path());
  return load_manifest(dir / "manifest.json");
}

TEST(Synthetic, SameSeedByteIdentical) {
  synthetic::Spec s;
  s.seed = 1;
  s.n_kernels = 6;
  s.n_inputs = 4;
  EXPECT_EQ(synthetic::generate(s), synthetic::generate(s));
  s.seed = 2;
  const auto other = synthetic::generate(s);
  s.seed = 1;
  EXPECT_NE(other.at("runtimes.csv"), synthetic::generate(s).at("runtimes.csv"));
}

TEST(Synthetic, SingleConfigIsDegenerate) {
  testing::TempDir dir;
  synthetic::Spec s;
  s.n_kernels = 6;
  s.n_inputs = 3;
  s.vector_dim = 8;
  s.configs = {"8"};
  const auto ds = load(s, dir);
  for (const auto& smp : ds.samples) EXPECT_EQ(smp.label, 0);
  Hyperparams hp;
  hp.epochs = 2;
  hp.dae_epochs = 2;
  hp.hidden = 4;
  hp.code = 2;
  hp.dae_hidden = 4;
  hp.fusion_hidden = 4;
  std::vector<std::size_t> ids(ds.samples.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  const auto b = train(ds, ids, {}, hp, 1);
  for (const auto& smp : ds.samples) EXPECT_EQ(predict(b, ds, smp).config, 0);
}

TEST(Synthetic, RuleReimplementationMatchesRuntimeArgmin) {
  testing::TempDir dir;
  synthetic::Spec s;
  s.n_kernels = 4;
  s.n_inputs = 5;
  s.vector_dim = 16;
  const auto ds = load(s, dir);
  ASSERT_EQ(ds.samples.size(), 20u);
  const auto l1 = std::find(ds.aux_names.begin(), ds.aux_names.end(), "l1_cache_misses") - ds.aux_names.begin();
  for (const auto& smp : ds.samples) {
    const int n_instr = static_cast<int>(ds.kernel_of(smp).graph.count(NodeKind::kInstruction));
    const int expected = testing::oracle::rule_a(n_instr, smp.aux[static_cast<std::size_t>(l1)], s.small_max,
                                                 s.large_min, static_cast<int>(s.n_inputs), 4);
    EXPECT_EQ(smp.label, expected) << smp.kernel_id << "/" << smp.input_id;
  }
}

TEST(Synthetic, ExhaustiveBucketTableAndInvariants) {
  testing::TempDir dir;
  synthetic::Spec s;
  s.n_kernels = 24;
  s.n_inputs = 10;
  s.vector_dim = 8;
  s.configs = {"1", "2", "4", "8", "12", "16", "20"};
  const auto ds = load(s, dir);
  const auto truth = nlohmann::json::parse(text::read_file(dir / "ground_truth.json"));
  const auto table = truth.at("table").get<std::vector<std::vector<int>>>();
  EXPECT_EQ(table, synthetic::rule_table(7));
  EXPECT_EQ(table[0][0], 0);
  EXPECT_EQ(table[1][1], 6);
  std::set<std::pair<int, int>> buckets_seen;
  for (const auto& smp : ds.samples) {
    const auto& k = ds.kernel_of(smp);
    EXPECT_TRUE(validate_graph(k.graph).empty());
    const int g = static_cast<double>(k.graph.count(NodeKind::kInstruction)) >= synthetic::graph_threshold(s);
    const int m = smp.aux[0] >= synthetic::l1_threshold(s);
    buckets_seen.insert({g, m});
    EXPECT_EQ(smp.label, table[static_cast<std::size_t>(g)][static_cast<std::size_t>(m)]);
    EXPECT_EQ(ds.configs.id(static_cast<std::size_t>(smp.label)),
              truth.at("labels").at(smp.kernel_id + "/" + smp.input_id).get<std::string>());
    // Margin: best at most 0.8 of the runner-up.
    std::vector<double> rt;
    for (const auto& r : smp.runtimes) rt.push_back(*r);
    std::sort(rt.begin(), rt.end());
    EXPECT_LE(rt[0], 0.8 * rt[1]);
  }
  EXPECT_EQ(buckets_seen.size(), 4u);
}

TEST(Synthetic, OracleRuleExamples) {
  synthetic::Spec s;
  std::map<std::string, double> low = {{"l1_cache_misses", 900.0}}, high = {{"l1_cache_misses", 1e5}};
  EXPECT_EQ(synthetic::oracle_rule(s, 5, low), 0);
  EXPECT_EQ(synthetic::oracle_rule(s, 20, high), 3);
  s.rule = "Z";
  EXPECT_EQ(catch_error([&] { synthetic::oracle_rule(s, 5, low); }).kind, ErrorKind::kGeneration);
}

TEST(Synthetic, ContradictorySpec) {
  synthetic::Spec s;
  s.configs.clear();
  EXPECT_EQ(catch_error([&] { synthetic::generate(s); }).kind, ErrorKind::kGeneration);
  s.configs = {"1"};
  s.n_kernels = 0;
  EXPECT_EQ(catch_error([&] { synthetic::generate(s); }).kind, ErrorKind::kGeneration);
}

}  // namespace
}  // namespace mga
