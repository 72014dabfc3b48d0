#include "corrml/scenarios.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <utility>

#include "json.hpp"

#include "corrml/error_metrics.hpp"
#include "corrml/errors.hpp"
#include "corrml/rng.hpp"

namespace corrml {
namespace {

std::uint64_t child_seed(std::uint64_t seed, const std::string& label) {
  return Rng(seed).child(label).seed();
}

std::string spec_label(const ModelSpec& spec) {
  return spec.label.empty() ? std::string(family_name(spec.family))
                            : spec.label;
}

void require_unique(const std::vector<std::string>& labels, const char* what) {
  std::set<std::string> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second)
      throw DataError(std::string("scenario: duplicate ") + what + " '" + l +
                      "'");
}

ErrorVector test_errors(const TrainedModel& model, const Dataset& test,
                        std::string label) {
  if (test.task().is_classification()) {
    std::vector<int> pred = model.predict_cls(test.features());
    return indicator_errors(test.target_cls(), pred, std::move(label),
                            test.provenance());
  }
  std::vector<double> pred = model.predict_reg(test.features());
  return residual_errors(test.target_reg(), pred, std::move(label),
                         test.provenance());
}

bool supports_importance(ModelFamily f) {
  return f == ModelFamily::decision_tree || f == ModelFamily::random_forest ||
         f == ModelFamily::gboost;
}

}  // namespace

ScenarioReport run_scenario1(const Dataset& data,
                             const std::vector<ModelSpec>& specs,
                             double split_fraction, std::uint64_t seed) {
  if (specs.size() < 2)
    throw DataError("scenario 1: need at least 2 model specs");

  std::vector<std::string> labels;
  labels.reserve(specs.size());
  for (const auto& s : specs) labels.push_back(spec_label(s));
  require_unique(labels, "model label");

  auto [train_set, test_set] = split(data, split_fraction, seed);

  std::vector<std::uint64_t> seeds;
  std::vector<std::future<TrainedModel>> jobs;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    seeds.push_back(child_seed(seed, "model_" + labels[k]));
    jobs.push_back(std::async(std::launch::async, [&, k] {
      ModelSpec s = specs[k];
      s.label = labels[k];
      return train(s, train_set, seeds[k]);
    }));
  }

  ScenarioReport report;
  report.scenario = 1;
  report.seed = seed;
  report.split_fraction = split_fraction;
  report.data_provenance = data.provenance();

  std::vector<ErrorVector> errors;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    TrainedModel model = jobs[k].get();
    errors.push_back(test_errors(model, test_set, labels[k]));
    report.models.push_back({labels[k], model.spec(), seeds[k],
                             average_error(errors.back())});
  }
  report.matrix = corr_matrix(errors, MethodChoice::automatic);
  return report;
}

ScenarioReport run_scenario2(const Dataset& data, const ModelSpec& base_spec,
                             const std::vector<std::string>& drops,
                             double split_fraction, std::uint64_t seed) {
  if (drops.size() < 2)
    throw DataError("scenario 2: need at least 2 feature drops");
  for (const auto& name : drops) data.feature_index(name);
  require_unique(drops, "dropped feature");

  auto [train_set, test_set] = split(data, split_fraction, seed);

  std::vector<std::string> labels;
  std::vector<std::uint64_t> seeds;
  std::vector<std::future<TrainedModel>> jobs;
  for (const auto& name : drops) {
    labels.push_back("model_no_" + name);
    seeds.push_back(child_seed(seed, "model_" + labels.back()));
  }
  for (std::size_t k = 0; k < drops.size(); ++k) {
    jobs.push_back(std::async(std::launch::async, [&, k] {
      ModelSpec s = base_spec;
      s.label = labels[k];
      return train(s, drop_feature(train_set, drops[k]), seeds[k]);
    }));
  }
  std::uint64_t full_seed = child_seed(seed, "model_full");
  std::future<TrainedModel> full_job = std::async(std::launch::async, [&] {
    ModelSpec s = base_spec;
    s.label = spec_label(base_spec);
    return train(s, train_set, full_seed);
  });

  ScenarioReport report;
  report.scenario = 2;
  report.seed = seed;
  report.split_fraction = split_fraction;
  report.data_provenance = data.provenance();
  report.dropped_features = drops;

  std::vector<ErrorVector> errors;
  for (std::size_t k = 0; k < drops.size(); ++k) {
    TrainedModel model = jobs[k].get();
    ErrorVector e =
        test_errors(model, drop_feature(test_set, drops[k]), labels[k]);
    report.models.push_back(
        {labels[k], model.spec(), seeds[k], average_error(e)});
    errors.push_back(std::move(e));
  }
  TrainedModel full_model = full_job.get();
  if (supports_importance(base_spec.family)) {
    report.importance = feature_importance(full_model);
    report.importance_features = data.feature_names();
  }
  report.matrix = corr_matrix(errors, MethodChoice::automatic);
  return report;
}

ScenarioReport run_scenario3(const Dataset& base,
                             const std::vector<EncoderConfig>& encoder_configs,
                             const std::vector<Dataset>& downstream,
                             std::uint64_t seed,
                             const Scenario3Options& options) {
  if (encoder_configs.size() < 3)
    throw DataError("scenario 3: need at least 3 encoder configs, got " +
                    std::to_string(encoder_configs.size()));
  if (downstream.size() < 2)
    throw DataError("scenario 3: need at least 2 downstream datasets");
  for (const auto& d : downstream) {
    if (!d.task().is_classification())
      throw DataError("scenario 3: downstream datasets must be classification");
    if (d.p() != base.p())
      throw DataError(
          "scenario 3: downstream feature width differs from base");
  }

  const std::size_t m = encoder_configs.size();
  const std::size_t d = downstream.size();

  std::vector<std::string> enc_labels;
  for (std::size_t i = 0; i < m; ++i)
    enc_labels.push_back(encoder_configs[i].label.empty()
                             ? "encoder_" + std::to_string(i)
                             : encoder_configs[i].label);
  require_unique(enc_labels, "encoder label");

  // One split seed for the whole run, so identical downstream datasets
  // receive identical splits.
  std::vector<std::pair<Dataset, Dataset>> splits;
  splits.reserve(d);
  for (const auto& ds : downstream)
    splits.push_back(split(ds, options.split_fraction, seed));

  ScenarioReport report;
  report.scenario = 3;
  report.seed = seed;
  report.split_fraction = options.split_fraction;
  report.data_provenance = base.provenance();
  for (const auto& ds : downstream)
    report.downstream_provenance.push_back(ds.provenance());

  std::vector<std::future<std::vector<double>>> jobs;
  std::vector<EncoderRun> runs(m);
  for (std::size_t i = 0; i < m; ++i) {
    runs[i].config = encoder_configs[i];
    runs[i].config.label = enc_labels[i];
    runs[i].pretrain_seed = child_seed(seed, "encoder_" + enc_labels[i]);
    runs[i].head_seed = child_seed(seed, "head_" + enc_labels[i]);
    jobs.push_back(std::async(std::launch::async, [&, i] {
      FoundationEncoder enc =
          pretrain_encoder(encoder_configs[i].hidden_sizes, base,
                           runs[i].pretrain_seed, options.pretrain);
      std::vector<double> row(d);
      for (std::size_t j = 0; j < d; ++j) {
        TrainedModel head = finetune_head(enc, splits[j].first,
                                          runs[i].head_seed, options.head);
        ErrorVector e = test_errors(head, splits[j].second, enc_labels[i]);
        row[j] = average_error(e);
      }
      return row;
    }));
  }

  PerformanceSeries series;
  series.encoder_labels = enc_labels;
  for (std::size_t j = 0; j < d; ++j)
    series.dataset_labels.push_back("dataset_" + std::to_string(j));
  series.avg_errors = Matrix(m, d);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> row = jobs[i].get();
    for (std::size_t j = 0; j < d; ++j) series.avg_errors(i, j) = row[j];
  }
  series.validate();

  CorrelationMatrix def2(series.dataset_labels, CorrMethod::pearson);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b)
      def2.set(a, b,
               def2_correlation(series, series.dataset_labels[a],
                                series.dataset_labels[b]));

  report.encoders = std::move(runs);
  report.series = std::move(series);
  report.def2_matrix = std::move(def2);
  return report;
}

namespace {

using ordered_json = nlohmann::ordered_json;

TaskKind task_kind_from(const std::string& name) {
  if (name == "regression") return TaskKind::regression;
  if (name == "classification") return TaskKind::classification;
  throw DataError("scenario config: unknown task '" + name + "'");
}

DatasetSource parse_source(const ordered_json& node) {
  if (!node.is_object())
    throw DataError("scenario config: dataset entry must be an object");
  if (node.contains("csv") == node.contains("synthetic"))
    throw DataError(
        "scenario config: dataset needs exactly one of 'csv' or 'synthetic'");

  DatasetSource src;
  if (node.contains("csv")) {
    const auto& c = node.at("csv");
    src.csv_path = c.at("path").get<std::string>();
    src.csv_target = c.at("target").get<std::string>();
    src.csv_task = task_kind_from(c.value("task", "regression"));
    return src;
  }

  const auto& s = node.at("synthetic");
  SyntheticConfig cfg;
  cfg.n = s.at("n").get<std::size_t>();
  cfg.p = s.at("p").get<std::size_t>();
  if (s.contains("signal_weights"))
    cfg.signal_weights = s.at("signal_weights").get<std::vector<double>>();
  else
    cfg.signal_weights.assign(cfg.p, 1.0);
  cfg.noise_sd = s.value("noise_sd", 0.0);
  cfg.nonlinearity = nonlinearity_from_name(s.value("nonlinearity", "none"));
  if (s.value("task", "regression") == "classification")
    cfg.task = Task::classification(s.value("n_classes", 2));
  else
    cfg.task = Task::regression();
  cfg.validate();
  src.synthetic = cfg;
  if (s.contains("seed")) src.gen_seed = s.at("seed").get<std::uint64_t>();
  return src;
}

ModelSpec parse_spec(const ordered_json& node) {
  ModelSpec spec;
  spec.family = family_from_name(node.at("family").get<std::string>());
  spec.label = node.value("label", "");
  if (node.contains("hyper")) {
    for (const auto& [key, value] : node.at("hyper").items()) {
      if (!value.is_number())
        throw DataError("scenario config: hyperparameter '" + key +
                        "' must be numeric");
      spec.hyper[key] = value.get<double>();
    }
  }
  return spec;
}

EncoderConfig parse_encoder(const ordered_json& node) {
  EncoderConfig cfg;
  const auto& h = node.at("hidden_sizes");
  if (h.is_array())
    cfg.hidden_sizes = h.get<std::vector<std::size_t>>();
  else
    cfg.hidden_sizes = {h.get<std::size_t>()};
  cfg.label = node.value("label", "");
  return cfg;
}

void check_keys(const ordered_json& j, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end())
      throw DataError("scenario config: unknown key '" + key + "'");
  }
}

}  // namespace

ScenarioConfig parse_scenario_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scenario config: parse failed: ") + e.what());
  }

  try {
    ScenarioConfig cfg;
    cfg.scenario = j.at("scenario").get<int>();
    if (cfg.scenario < 1 || cfg.scenario > 3)
      throw DataError("scenario config: scenario must be 1, 2, or 3");
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.split_fraction = j.value("split_fraction", 0.8);
    cfg.data = parse_source(j.at("dataset"));

    switch (cfg.scenario) {
      case 1:
        check_keys(j, {"scenario", "seed", "split_fraction", "dataset",
                       "models"});
        for (const auto& node : j.at("models")) {
          cfg.specs.push_back(parse_spec(node));
        }
        break;
      case 2:
        check_keys(j, {"scenario", "seed", "split_fraction", "dataset",
                       "base_model", "drops"});
        cfg.base_spec = parse_spec(j.at("base_model"));
        cfg.drops = j.at("drops").get<std::vector<std::string>>();
        break;
      case 3:
        check_keys(j, {"scenario", "seed", "split_fraction", "dataset",
                       "downstream", "encoders", "pretrain", "head"});
        for (const auto& node : j.at("downstream"))
          cfg.downstream.push_back(parse_source(node));
        for (const auto& node : j.at("encoders"))
          cfg.encoder_configs.push_back(parse_encoder(node));
        if (j.contains("pretrain")) {
          const auto& p = j.at("pretrain");
          cfg.s3.pretrain.epochs = p.value("epochs", cfg.s3.pretrain.epochs);
          cfg.s3.pretrain.learning_rate =
              p.value("learning_rate", cfg.s3.pretrain.learning_rate);
          cfg.s3.pretrain.l2 = p.value("l2", cfg.s3.pretrain.l2);
        }
        if (j.contains("head")) {
          const auto& h = j.at("head");
          cfg.s3.head.hidden = h.value("hidden", cfg.s3.head.hidden);
          cfg.s3.head.epochs = h.value("epochs", cfg.s3.head.epochs);
          cfg.s3.head.learning_rate =
              h.value("learning_rate", cfg.s3.head.learning_rate);
          cfg.s3.head.l2 = h.value("l2", cfg.s3.head.l2);
        }
        break;
      default:
        break;
    }
    cfg.s3.split_fraction = cfg.split_fraction;
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scenario config: ") + e.what());
  }
}

Dataset DatasetSource::resolve(std::uint64_t fallback_gen_seed) const {
  if (!csv_path.empty()) return load_csv(csv_path, csv_target, csv_task);
  if (!synthetic.has_value())
    throw DataError("dataset source: nothing to load");
  return gen_synthetic(*synthetic, gen_seed.value_or(fallback_gen_seed));
}

ScenarioReport run_scenario(const ScenarioConfig& config) {
  switch (config.scenario) {
    case 1:
      return run_scenario1(
          config.data.resolve(child_seed(config.seed, "data")), config.specs,
          config.split_fraction, config.seed);
    case 2:
      return run_scenario2(
          config.data.resolve(child_seed(config.seed, "data")),
          config.base_spec, config.drops, config.split_fraction, config.seed);
    case 3: {
      Dataset base = config.data.resolve(child_seed(config.seed, "data"));
      std::vector<Dataset> downstream;
      downstream.reserve(config.downstream.size());
      for (std::size_t j = 0; j < config.downstream.size(); ++j)
        downstream.push_back(config.downstream[j].resolve(
            child_seed(config.seed, "data_" + std::to_string(j))));
      return run_scenario3(base, config.encoder_configs, downstream,
                           config.seed, config.s3);
    }
    default:
      throw DataError("run_scenario: scenario must be 1, 2, or 3");
  }
}

}  // namespace corrml
