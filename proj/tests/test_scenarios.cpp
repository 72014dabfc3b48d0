#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "corrml/errors.hpp"
#include "corrml/scenarios.hpp"
#include "doctest.h"

using namespace corrml;

namespace {

Dataset synth(std::size_t n, std::size_t p, std::vector<double> w, double noise,
              std::uint64_t seed, Task task = Task::regression()) {
  SyntheticConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.signal_weights = std::move(w);
  cfg.noise_sd = noise;
  cfg.task = task;
  return gen_synthetic(cfg, seed);
}

ModelSpec spec_of(ModelFamily f, std::string label = {}) {
  ModelSpec s;
  s.family = f;
  s.label = std::move(label);
  return s;
}

}  // namespace

TEST_SUITE("scenarios") {

TEST_CASE("scenario 1 builds a full pearson matrix over the fleet") {
  Dataset d = synth(300, 4, {1, 2, 0.5, 0}, 0.4, 21);
  std::vector<ModelSpec> specs{
      spec_of(ModelFamily::linear_regression), spec_of(ModelFamily::ridge),
      spec_of(ModelFamily::decision_tree), spec_of(ModelFamily::random_forest),
      spec_of(ModelFamily::gboost)};
  ScenarioReport r = run_scenario1(d, specs, 0.8, 5);

  CHECK(r.scenario == 1);
  CHECK(r.seed == 5);
  REQUIRE(r.matrix.has_value());
  CHECK(r.matrix->size() == 5);
  CHECK(r.matrix->method() == CorrMethod::pearson);
  CHECK(r.models.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(*r.matrix->at(i, i).value == 1.0);
    for (std::size_t j = 0; j < 5; ++j) CHECK(r.matrix->at(i, j) == r.matrix->at(j, i));
  }
  // fleet labels and matrix labels line up
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(r.matrix->labels()[i] == r.models[i].label);
  for (const auto& m : r.models) CHECK(std::isfinite(m.avg_error));
}

TEST_CASE("identical specs with identical seeds correlate exactly") {
  Dataset d = synth(200, 3, {1, 1, 0}, 0.3, 22);
  // seed derives from the label, so equal labels would collide; the tree
  // family ignores its seed entirely, making the pair bit-identical anyway
  std::vector<ModelSpec> specs{spec_of(ModelFamily::decision_tree, "a"),
                               spec_of(ModelFamily::decision_tree, "b")};
  ScenarioReport r = run_scenario1(d, specs, 0.8, 9);
  CHECK(*r.matrix->at(0, 1).value == 1.0);
  CHECK(r.models[0].avg_error == r.models[1].avg_error);
}

TEST_CASE("scenario 1 rerun replays bit-identically") {
  Dataset d = synth(250, 4, {1, 0, 2, 1}, 0.5, 23, Task::classification(3));
  std::vector<ModelSpec> specs{spec_of(ModelFamily::gboost),
                               spec_of(ModelFamily::random_forest),
                               spec_of(ModelFamily::mlp1)};
  ScenarioReport a = run_scenario1(d, specs, 0.75, 7);
  ScenarioReport b = run_scenario1(d, specs, 0.75, 7);
  REQUIRE(a.matrix.has_value());
  CHECK(*a.matrix == *b.matrix);
  CHECK(a.models.size() == b.models.size());
  for (std::size_t i = 0; i < a.models.size(); ++i) {
    CHECK(a.models[i].avg_error == b.models[i].avg_error);
    CHECK(a.models[i].train_seed == b.models[i].train_seed);
  }
  CHECK(a.matrix->method() == CorrMethod::phik);
}

TEST_CASE("scenario 1 preconditions") {
  Dataset d = synth(100, 2, {1, 1}, 0.2, 24);
  CHECK_THROWS_WITH_AS(
      run_scenario1(d, {spec_of(ModelFamily::ridge)}, 0.8, 1),
      doctest::Contains("at least 2"), DataError);
  std::vector<ModelSpec> dup{spec_of(ModelFamily::ridge, "m"),
                             spec_of(ModelFamily::gboost, "m")};
  CHECK_THROWS_WITH_AS(run_scenario1(d, dup, 0.8, 1),
                       doctest::Contains("duplicate"), DataError);
  std::vector<ModelSpec> bad{spec_of(ModelFamily::logistic_regression),
                             spec_of(ModelFamily::ridge)};
  CHECK_THROWS_AS(run_scenario1(d, bad, 0.8, 1), DataError);
}

TEST_CASE("scenario 2 names models after the dropped feature") {
  Dataset d = synth(300, 5, {2, 1, 1, 0.5, 0}, 0.3, 25);
  ScenarioReport r = run_scenario2(d, spec_of(ModelFamily::gboost),
                                   {"x0", "x2", "x4"}, 0.8, 3);
  CHECK(r.scenario == 2);
  CHECK(r.dropped_features == std::vector<std::string>{"x0", "x2", "x4"});
  REQUIRE(r.matrix.has_value());
  CHECK(r.matrix->size() == 3);
  CHECK(r.matrix->labels() ==
        std::vector<std::string>{"model_no_x0", "model_no_x2", "model_no_x4"});
  REQUIRE(r.importance.has_value());
  CHECK(r.importance_features == d.feature_names());
  CHECK(r.importance->shares.size() == 5);
  double sum = 0;
  for (double s : r.importance->shares) sum += s;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dropping an irrelevant feature leaves the errors unchanged") {
  // weight 0 and zero noise: x4 never influences the target
  Dataset d = synth(240, 5, {1, 2, 1, 0.5, 0}, 0.0, 26);
  ModelSpec base = spec_of(ModelFamily::linear_regression);
  base.hyper["l2"] = 0.0;
  ScenarioReport r = run_scenario2(d, base, {"x4", "x1"}, 0.8, 4);
  CHECK(r.matrix->labels()[0] == "model_no_x4");

  // replay the run's split and train both fleets by hand
  auto [train_set, test_set] = split(d, 0.8, 4);
  TrainedModel full = train(base, train_set, 0);
  TrainedModel no_x4 = train(base, drop_feature(train_set, "x4"), 0);
  auto e_full = full.predict_reg(test_set.features());
  auto e_drop = no_x4.predict_reg(drop_feature(test_set, "x4").features());
  for (std::size_t i = 0; i < e_full.size(); ++i)
    CHECK(std::abs(e_full[i] - e_drop[i]) < 1e-8);

  // and the scenario's reported average matches the replay
  ErrorVector replay = residual_errors(test_set.target_reg(), e_drop);
  CHECK(r.models[0].avg_error == doctest::Approx(average_error(replay)).epsilon(1e-12));
}

TEST_CASE("scenario 2 importance is omitted for non-tree bases") {
  Dataset d = synth(150, 3, {1, 1, 1}, 0.2, 27);
  ModelSpec base = spec_of(ModelFamily::linear_regression);
  ScenarioReport r = run_scenario2(d, base, {"x0", "x1"}, 0.8, 2);
  CHECK_FALSE(r.importance.has_value());
  CHECK(r.matrix.has_value());
}

TEST_CASE("scenario 2 preconditions") {
  Dataset d = synth(100, 3, {1, 1, 1}, 0.2, 28);
  ModelSpec base = spec_of(ModelFamily::decision_tree);
  CHECK_THROWS_WITH_AS(run_scenario2(d, base, {"x0"}, 0.8, 1),
                       doctest::Contains("at least 2"), DataError);
  CHECK_THROWS_AS(run_scenario2(d, base, {"x0", "zz"}, 0.8, 1), DataError);
  CHECK_THROWS_WITH_AS(run_scenario2(d, base, {"x0", "x0"}, 0.8, 1),
                       doctest::Contains("duplicate"), DataError);
}

TEST_CASE("scenario 3 fills the series and the dataset-pair matrix") {
  Dataset base = synth(200, 6, {1, 1, 1, 1, 0, 0}, 0.3, 29,
                       Task::classification(3));
  std::vector<Dataset> down{
      synth(120, 6, {1, 0, 1, 0, 1, 0}, 0.2, 30, Task::classification(2)),
      synth(120, 6, {0, 1, 0, 1, 0, 1}, 0.2, 31, Task::classification(2)),
      synth(120, 6, {1, 1, 0, 0, 1, 1}, 0.2, 32, Task::classification(2))};
  std::vector<EncoderConfig> encs{{{8}, "e8"}, {{16}, "e16"}, {{16, 8}, ""},
                                  {{4}, "e4"}};
  Scenario3Options opt;
  opt.pretrain.epochs = 60;
  opt.head.epochs = 60;
  ScenarioReport r = run_scenario3(base, encs, down, 6, opt);

  CHECK(r.scenario == 3);
  REQUIRE(r.series.has_value());
  CHECK(r.series->encoder_labels ==
        std::vector<std::string>{"e8", "e16", "encoder_2", "e4"});
  CHECK(r.series->dataset_labels.size() == 3);
  CHECK(r.series->avg_errors.rows() == 4);
  CHECK(r.series->avg_errors.cols() == 3);
  for (double v : r.series->avg_errors.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  REQUIRE(r.def2_matrix.has_value());
  CHECK(r.def2_matrix->size() == 3);
  CHECK(r.def2_matrix->method() == CorrMethod::pearson);
  CHECK(r.encoders.size() == 4);
  CHECK(r.downstream_provenance.size() == 3);
  // head seeds are shared across datasets per encoder, pretrain seeds differ
  CHECK(r.encoders[0].pretrain_seed != r.encoders[1].pretrain_seed);
}

TEST_CASE("a duplicated downstream dataset correlates to exactly 1") {
  Dataset base = synth(150, 4, {1, 1, 1, 0}, 0.3, 33, Task::classification(2));
  Dataset task = synth(100, 4, {1, 0, 1, 0}, 0.2, 34, Task::classification(2));
  std::vector<Dataset> down{task, task, task};
  std::vector<EncoderConfig> encs{{{8}, "a"}, {{12}, "b"}, {{6}, "c"}};
  Scenario3Options opt;
  opt.pretrain.epochs = 40;
  opt.head.epochs = 40;
  ScenarioReport r = run_scenario3(base, encs, down, 2, opt);

  // identical data and identical seeds make the error columns bit-identical
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.series->avg_errors(i, 0) == r.series->avg_errors(i, 1));
    CHECK(r.series->avg_errors(i, 0) == r.series->avg_errors(i, 2));
  }
  const CorrValue& pair = r.def2_matrix->at(0, 1);
  if (pair.defined()) {
    CHECK(*pair.value == 1.0);
  } else {
    CHECK(pair.undefined_reason == "zero variance");
  }
}

TEST_CASE("scenario 3 replays bit-identically") {
  Dataset base = synth(120, 4, {1, 1, 0, 1}, 0.3, 35, Task::classification(2));
  std::vector<Dataset> down{
      synth(80, 4, {1, 0, 1, 0}, 0.2, 36, Task::classification(2)),
      synth(80, 4, {0, 1, 0, 1}, 0.2, 37, Task::classification(2))};
  std::vector<EncoderConfig> encs{{{8}, ""}, {{6}, ""}, {{4}, ""}};
  Scenario3Options opt;
  opt.pretrain.epochs = 30;
  opt.head.epochs = 30;
  ScenarioReport a = run_scenario3(base, encs, down, 4, opt);
  ScenarioReport b = run_scenario3(base, encs, down, 4, opt);
  CHECK(a.series->avg_errors == b.series->avg_errors);
  CHECK(*a.def2_matrix == *b.def2_matrix);
}

TEST_CASE("scenario 3 preconditions") {
  Dataset base = synth(100, 3, {1, 1, 1}, 0.2, 38, Task::classification(2));
  Dataset down_ok = synth(80, 3, {1, 0, 1}, 0.2, 39, Task::classification(2));
  Dataset down_reg = synth(80, 3, {1, 0, 1}, 0.2, 39);
  Dataset down_wide = synth(80, 4, {1, 0, 1, 1}, 0.2, 39, Task::classification(2));
  std::vector<EncoderConfig> encs{{{8}, ""}, {{6}, ""}, {{4}, ""}};

  CHECK_THROWS_WITH_AS(
      run_scenario3(base, {{{8}, ""}, {{6}, ""}}, {down_ok, down_ok}, 1, {}),
      doctest::Contains("at least 3"), DataError);
  CHECK_THROWS_WITH_AS(run_scenario3(base, encs, {down_ok}, 1, {}),
                       doctest::Contains("at least 2"), DataError);
  CHECK_THROWS_AS(run_scenario3(base, encs, {down_ok, down_reg}, 1, {}),
                  DataError);
  CHECK_THROWS_AS(run_scenario3(base, encs, {down_ok, down_wide}, 1, {}),
                  DataError);
}

TEST_CASE("error vectors within a scenario share their test rows") {
  Dataset d = synth(200, 4, {1, 1, 1, 1}, 0.3, 40);
  std::vector<ModelSpec> specs{spec_of(ModelFamily::decision_tree),
                               spec_of(ModelFamily::ridge)};
  ScenarioReport r = run_scenario1(d, specs, 0.8, 11);
  // both models were scored on floor(0.2 * 200) = 40 rows
  REQUIRE(r.matrix.has_value());
  CHECK(r.matrix->at(0, 1).n_points == 40);
}

TEST_CASE("config json parses into a runnable scenario description") {
  std::string text = R"({
    "scenario": 1,
    "seed": 12,
    "split_fraction": 0.75,
    "dataset": {"synthetic": {"n": 120, "p": 3, "signal_weights": [1, 2, 0.5],
                               "noise_sd": 0.2, "task": "regression"}},
    "models": [
      {"family": "ridge", "hyper": {"l2": 2.0}},
      {"family": "gboost", "label": "boost", "hyper": {"n_trees": 20}}
    ]
  })";
  ScenarioConfig cfg = parse_scenario_config(text);
  CHECK(cfg.scenario == 1);
  CHECK(cfg.seed == 12);
  CHECK(cfg.split_fraction == 0.75);
  CHECK(cfg.specs.size() == 2);
  CHECK(cfg.specs[0].family == ModelFamily::ridge);
  CHECK(cfg.specs[0].hyper.at("l2") == 2.0);
  CHECK(cfg.specs[1].label == "boost");
  REQUIRE(cfg.data.synthetic.has_value());
  CHECK(cfg.data.synthetic->n == 120);

  ScenarioReport r = run_scenario(cfg);
  CHECK(r.scenario == 1);
  CHECK(r.matrix->size() == 2);
  // the dataset seed defaults to a child of the scenario seed: replays agree
  ScenarioReport r2 = run_scenario(cfg);
  CHECK(*r.matrix == *r2.matrix);
}

TEST_CASE("config validation failures") {
  CHECK_THROWS_AS(parse_scenario_config("not json"), DataError);
  CHECK_THROWS_WITH_AS(parse_scenario_config(R"({"scenario": 4})"),
                       doctest::Contains("scenario"), DataError);
  CHECK_THROWS_WITH_AS(
      parse_scenario_config(
          R"({"scenario": 1, "typo_key": 1, "dataset": {"synthetic": {"n": 10, "p": 1}}, "models": []})"),
      doctest::Contains("unknown key"), DataError);
  // scenario 2 keys rejected in a scenario 1 config
  CHECK_THROWS_AS(parse_scenario_config(R"({
    "scenario": 1,
    "dataset": {"synthetic": {"n": 10, "p": 1}},
    "models": [], "drops": ["x0"]
  })"),
                  DataError);
  // a dataset must name exactly one source
  CHECK_THROWS_AS(parse_scenario_config(R"({
    "scenario": 1,
    "dataset": {},
    "models": [{"family": "ridge"}, {"family": "gboost"}]
  })"),
                  DataError);
}

TEST_CASE("scenario 3 config round-trips the extra blocks") {
  std::string text = R"({
    "scenario": 3,
    "seed": 3,
    "dataset": {"synthetic": {"n": 100, "p": 4, "task": "classification",
                               "n_classes": 3}},
    "encoders": [{"hidden_sizes": [8], "label": "a"},
                  {"hidden_sizes": 6}, {"hidden_sizes": [12, 4]}],
    "downstream": [
      {"synthetic": {"n": 80, "p": 4, "task": "classification", "seed": 71}},
      {"synthetic": {"n": 80, "p": 4, "task": "classification", "seed": 72}}
    ],
    "pretrain": {"epochs": 25},
    "head": {"epochs": 25, "hidden": 16}
  })";
  ScenarioConfig cfg = parse_scenario_config(text);
  CHECK(cfg.scenario == 3);
  CHECK(cfg.encoder_configs.size() == 3);
  CHECK(cfg.encoder_configs[0].label == "a");
  CHECK(cfg.encoder_configs[1].hidden_sizes == std::vector<std::size_t>{6});
  CHECK(cfg.encoder_configs[2].hidden_sizes == std::vector<std::size_t>{12, 4});
  CHECK(cfg.downstream.size() == 2);
  CHECK(cfg.downstream[0].gen_seed == std::uint64_t{71});
  CHECK(cfg.s3.pretrain.epochs == 25);
  CHECK(cfg.s3.head.epochs == 25);
  CHECK(cfg.s3.head.hidden == 16);

  ScenarioReport r = run_scenario(cfg);
  CHECK(r.series->avg_errors.rows() == 3);
  CHECK(r.series->avg_errors.cols() == 2);
}

}
