#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corrml/correlation.hpp"
#include "corrml/dataset.hpp"
#include "corrml/models.hpp"

namespace corrml {

struct EncoderConfig {
  std::vector<std::size_t> hidden_sizes;
  std::string label;
};

struct ScenarioModelResult {
  std::string label;
  ModelSpec spec;
  std::uint64_t train_seed = 0;
  double avg_error = 0.0;  // on the held-out test rows
};

struct EncoderRun {
  EncoderConfig config;
  std::uint64_t pretrain_seed = 0;
  std::uint64_t head_seed = 0;
};

// Everything needed to read one scenario run and to replay it exactly.
struct ScenarioReport {
  int scenario = 0;
  std::uint64_t seed = 0;
  double split_fraction = 0.0;
  std::string data_provenance;

  std::vector<ScenarioModelResult> models;       // scenarios 1 and 2
  std::optional<CorrelationMatrix> matrix;       // scenarios 1 and 2

  std::vector<std::string> dropped_features;     // scenario 2
  std::optional<FeatureImportance> importance;   // scenario 2, full model
  std::vector<std::string> importance_features;  // scenario 2 feature order

  std::vector<EncoderRun> encoders;                  // scenario 3
  std::vector<std::string> downstream_provenance;    // scenario 3
  std::optional<PerformanceSeries> series;           // scenario 3
  std::optional<CorrelationMatrix> def2_matrix;      // scenario 3
};

// One shared split; every spec trains on the identical train set with a
// per-model seed derived from (seed, model label); errors are measured on
// the shared test rows. A failed training aborts the whole run.
ScenarioReport run_scenario1(const Dataset& data,
                             const std::vector<ModelSpec>& specs,
                             double split_fraction, std::uint64_t seed);

// Trains one model per dropped feature, each labeled "model_no_<feature>",
// on train rows shared across the fleet. The base spec trained on the full
// feature set contributes its feature importance when its family supports
// importance; otherwise the report omits it.
ScenarioReport run_scenario2(const Dataset& data, const ModelSpec& base_spec,
                             const std::vector<std::string>& drops,
                             double split_fraction, std::uint64_t seed);

struct Scenario3Options {
  double split_fraction = 0.8;
  MlpTrainOptions pretrain;
  HeadConfig head;
};

// Pretrains one encoder per config on the base dataset, fine-tunes a head
// per (encoder, downstream dataset), and correlates dataset pairs across
// the encoder axis. Downstream datasets must be classification tasks.
ScenarioReport run_scenario3(const Dataset& base,
                             const std::vector<EncoderConfig>& encoder_configs,
                             const std::vector<Dataset>& downstream,
                             std::uint64_t seed,
                             const Scenario3Options& options = {});

// A dataset named by a scenario config: either a CSV file or a synthetic
// generator. The generator seed defaults to a child of the scenario seed.
struct DatasetSource {
  std::string csv_path;
  std::string csv_target;
  TaskKind csv_task = TaskKind::regression;
  std::optional<SyntheticConfig> synthetic;
  std::optional<std::uint64_t> gen_seed;

  Dataset resolve(std::uint64_t fallback_gen_seed) const;
};

struct ScenarioConfig {
  int scenario = 0;
  std::uint64_t seed = 0;
  double split_fraction = 0.8;
  DatasetSource data;  // scenario 1/2 dataset, scenario 3 base

  std::vector<ModelSpec> specs;  // scenario 1

  ModelSpec base_spec;             // scenario 2
  std::vector<std::string> drops;  // scenario 2

  std::vector<EncoderConfig> encoder_configs;  // scenario 3
  std::vector<DatasetSource> downstream;       // scenario 3
  Scenario3Options s3;
};

ScenarioConfig parse_scenario_config(const std::string& json_text);
ScenarioReport run_scenario(const ScenarioConfig& config);

}  // namespace corrml
