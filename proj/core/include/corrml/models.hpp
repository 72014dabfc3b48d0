#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "corrml/dataset.hpp"
#include "corrml/matrix.hpp"
#include "corrml/mlp.hpp"

namespace corrml {

enum class ModelFamily {
  linear_regression,
  ridge,
  logistic_regression,
  decision_tree,
  random_forest,
  gboost,
  mlp1,
  mlp2,
  finetuned_head,
};

std::string_view family_name(ModelFamily f);
ModelFamily family_from_name(std::string_view name);

// Hyperparameter names and defaults are family-specific; train() rejects
// names a family does not understand.
struct ModelSpec {
  ModelFamily family = ModelFamily::linear_regression;
  std::map<std::string, double> hyper;
  std::string label;

  double hyper_or(const std::string& key, double fallback) const;
  bool operator==(const ModelSpec&) const = default;
};

struct FeatureImportance {
  std::vector<double> shares;  // sums to 1, or all zero when no_splits
  bool no_splits = false;
};

class TrainedModel {
 public:
  TrainedModel() = default;

  const ModelSpec& spec() const;
  std::uint64_t train_seed() const;
  const std::vector<std::string>& feature_names() const;
  const Task& task() const;
  std::size_t p() const;

  // Dispatches on the training task; classification outputs lie in 0..K-1.
  Target predict(const Matrix& features) const;
  std::vector<double> predict_reg(const Matrix& features) const;
  std::vector<int> predict_cls(const Matrix& features) const;

  struct Impl;
  explicit TrainedModel(std::shared_ptr<const Impl> impl);
  const Impl& impl() const;

 private:
  std::shared_ptr<const Impl> impl_;
};

TrainedModel train(const ModelSpec& spec, const Dataset& train_data,
                   std::uint64_t seed);

// Total split gain per feature, normalized to sum 1. Tree ensembles only.
FeatureImportance feature_importance(const TrainedModel& model);

// Freezes the encoder and trains one dense hidden layer plus an output
// layer on the encodings. The result predicts end-to-end from raw features.
struct HeadConfig {
  std::size_t hidden = 64;
  std::size_t epochs = 500;
  double learning_rate = 0.05;
  double l2 = 0.0;
};

TrainedModel finetune_head(const FoundationEncoder& encoder,
                           const Dataset& downstream, std::uint64_t seed,
                           const HeadConfig& config = {});

// Versioned JSON round-trip for reproducible reruns.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);

}  // namespace corrml
