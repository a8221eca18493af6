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

#include <numeric>

#include "mga/model.hpp"
#include "mga/pipeline.hpp"
#include "mga/synthetic.hpp"
#include "support.hpp"

namespace mga {
namespace {

using testing::catch_error;

Hyperparams small_hp() {
  Hyperparams hp;
  hp.hidden = 8;
  hp.code = 4;
  hp.dae_hidden = 12;
  hp.fusion_hidden = 8;
  hp.epochs = 15;
  hp.dae_epochs = 10;
  hp.learning_rate = 1e-2;
  return hp;
}

struct Fixture {
  testing::TempDir dir;
  Dataset ds;
  std::vector<std::size_t> ids;

  explicit Fixture(std::size_t kernels = 8, std::size_t inputs = 4) {
    synthetic::Spec s;
    s.n_kernels = kernels;
    s.n_inputs = inputs;
    s.vector_dim = 12;
    s.seed = 3;
    synthetic::write(synthetic::generate(s), dir.path());
    ds = load_manifest(dir / "manifest.json");
    ids.resize(ds.samples.size());
    std::iota(ids.begin(), ids.end(), std::size_t{0});
  }
};

std::vector<double> curve(const TrainingLog& log) {
  std::vector<double> out = log.dae_losses;
  for (const auto& e : log.epochs) out.push_back(e.train_loss);
  return out;
}

TEST(Hyperparams, JsonRoundTripAndUnknownKeys) {
  auto hp = small_hp();
  hp.dae_feature = DaeFeature::kReconstruction;
  hp.use_aux = false;
  const auto back = Hyperparams::from_json(hp.to_json());
  EXPECT_EQ(back.to_json(), hp.to_json());
  EXPECT_TRUE(catch_error([&] { hp.update_from_json({{"hiden", 3}}); }).thrown);
}

TEST(Train, FixedSeedReproducesLossCurves) {
  Fixture f;
  const std::vector<std::size_t> tr(f.ids.begin(), f.ids.begin() + 24), va(f.ids.begin() + 24, f.ids.end());
  const auto a = train(f.ds, tr, va, small_hp(), 5);
  const auto b = train(f.ds, tr, va, small_hp(), 5);
  EXPECT_EQ(curve(a.log), curve(b.log));
  EXPECT_TRUE(a.net.params == b.net.params);
  const auto c = train(f.ds, tr, va, small_hp(), 6);
  EXPECT_NE(curve(a.log), curve(c.log));
}

TEST(Train, PredictIsPureAndSurvivesSaveLoad) {
  Fixture f;
  const auto b = train(f.ds, f.ids, {}, small_hp(), 1);
  testing::TempDir dir;
  save_bundle(b, dir / "model.json");
  const auto loaded = load_bundle(dir / "model.json");
  for (const auto& s : f.ds.samples) {
    const auto p1 = predict(b, f.ds, s), p2 = predict(b, f.ds, s), p3 = predict(loaded, f.ds, s);
    EXPECT_EQ(p1.config, p2.config);
    EXPECT_EQ(p1.probabilities, p2.probabilities);
    EXPECT_EQ(p1.config, p3.config);
    EXPECT_EQ(p1.probabilities, p3.probabilities);
    EXPECT_NEAR(p1.probabilities.sum(), 1.0, 1e-12);
  }
}

TEST(Train, BundleFormatVersionIsChecked) {
  Fixture f(6, 2);
  auto hp = small_hp();
  hp.epochs = 1;
  auto j = to_json(train(f.ds, f.ids, {}, hp, 1));
  j["format_version"] = 99;
  EXPECT_EQ(catch_error([&] { bundle_from_json(j); }).kind, ErrorKind::kFormat);
}

TEST(Train, EmptyClassNeedsOptIn) {
  Fixture f(6, 4);
  std::vector<std::size_t> tr;
  const int missing = f.ds.samples[0].label;
  for (auto i : f.ids)
    if (f.ds.samples[i].label != missing) tr.push_back(i);
  auto hp = small_hp();
  hp.epochs = 1;
  EXPECT_EQ(catch_error([&] { train(f.ds, tr, {}, hp, 1); }).kind, ErrorKind::kTraining);
  hp.allow_empty_classes = true;
  EXPECT_FALSE(catch_error([&] { train(f.ds, tr, {}, hp, 1); }).thrown);
}

TEST(Predict, MissingModalityIsPredictionError) {
  Fixture f(6, 2);
  auto hp = small_hp();
  hp.epochs = 1;
  const auto b = train(f.ds, f.ids, {}, hp, 1);
  const auto& k = f.ds.kernels[0];
  const auto& aux = f.ds.samples[0].aux;
  EXPECT_EQ(catch_error([&] { predict(b, FlowGraph{}, k.vector, aux); }).kind, ErrorKind::kPrediction);
  EXPECT_EQ(catch_error([&] { predict(b, k.graph, {}, aux); }).kind, ErrorKind::kPrediction);
  EXPECT_EQ(catch_error([&] { predict(b, k.graph, k.vector, {}); }).kind, ErrorKind::kPrediction);
  const std::vector<double> short_vec(3, 0.0);
  EXPECT_EQ(catch_error([&] { predict(b, k.graph, short_vec, aux); }).kind, ErrorKind::kShape);
}

TEST(Predict, CrossArchitectureRouting) {
  Fixture f(6, 3);
  const ArchDescriptor host{49152, 1 << 20, 1 << 25, 1e6}, target{32768, 1 << 19, 1 << 24, 2e6};
  TrainOptions opts;
  opts.train_arch = host;
  auto hp = small_hp();
  const auto b = train(f.ds, f.ids, {}, hp, 2, opts);
  for (const auto& s : f.ds.samples) {
    const auto plain = predict(b, f.ds, s);
    PredictOptions same;
    same.target_arch = host;
    EXPECT_EQ(predict(b, f.ds, s, same).probabilities, plain.probabilities);

    // A different target changes only the counter features: feeding the
    // rescaled counters into the fusion head by hand gives the same output.
    PredictOptions other;
    other.target_arch = target;
    const auto moved = predict(b, f.ds, s, other);
    const auto& k = f.ds.kernel_of(s);
    const auto g = b.net.graph_embedding(nn::compile_graph(k.graph, b.vocab));
    const auto code = code_features(b, k.vector);
    auto raw = s.aux;
    scale_aux_cross_arch(raw, b.aux_names, host, target);
    const auto by_hand = nn::fuse_and_classify(b.net.params, b.net.fusion, g, code, b.minmax.transform_row(raw));
    EXPECT_EQ(moved.probabilities, by_hand);
  }
  PredictOptions no_train;
  no_train.train_arch = std::nullopt;
  no_train.target_arch = target;
  auto untagged = b;
  untagged.train_arch.reset();
  EXPECT_EQ(catch_error([&] { predict(untagged, f.ds, f.ds.samples[0], no_train); }).kind, ErrorKind::kDescriptor);
}

TEST(Predict, TargetArchitectureIrrelevantWithoutCounters) {
  Fixture f(6, 3);
  auto hp = small_hp();
  hp.use_aux = false;
  TrainOptions opts;
  opts.train_arch = ArchDescriptor{49152, 1 << 20, 1 << 25, 1e6};
  const auto b = train(f.ds, f.ids, {}, hp, 2, opts);
  PredictOptions other;
  other.target_arch = ArchDescriptor{32768, 1 << 19, 1 << 24, 2e6};
  for (const auto& s : f.ds.samples)
    EXPECT_EQ(predict(b, f.ds, s, other).probabilities, predict(b, f.ds, s).probabilities);
}

TEST(Pipeline, CrossValidationIndependentOfJobs) {
  Fixture f(10, 3);
  const auto plan = make_plan(f.ds, "kfold5", 4);
  auto hp = small_hp();
  hp.epochs = 5;
  CrossValidationOptions one, many;
  many.jobs = 3;
  const auto a = cross_validate(f.ds, plan, hp, 4, one);
  const auto b = cross_validate(f.ds, plan, hp, 4, many);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(to_json(a[i].report), to_json(b[i].report));
    EXPECT_EQ(curve(a[i].log), curve(b[i].log));
  }
}

TEST(Pipeline, WritesAndReadsFoldReports) {
  Fixture f(10, 3);
  auto hp = small_hp();
  hp.epochs = 3;
  const auto results = cross_validate(f.ds, make_plan(f.ds, "kfold5", 1), hp, 1);
  testing::TempDir dir;
  write_fold_results(dir.path(), "kfold5", results);
  const auto back = read_fold_reports(dir.path());
  ASSERT_EQ(back.size(), 5u);
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(to_json(back[i]), to_json(results[i].report));
  testing::TempDir empty;
  EXPECT_EQ(catch_error([&] { read_fold_reports(empty.path()); }).kind, ErrorKind::kReport);
}

}  // namespace
}  // namespace mga
