#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "corrml/matrix.hpp"

namespace corrml {

enum class TaskKind { regression, classification };

struct Task {
  TaskKind kind = TaskKind::regression;
  int n_classes = 0;  // >= 2 when classification, 0 otherwise

  static Task regression() { return {TaskKind::regression, 0}; }
  static Task classification(int k) { return {TaskKind::classification, k}; }
  bool is_classification() const { return kind == TaskKind::classification; }
  bool operator==(const Task&) const = default;
};

// Regression targets are reals, classification targets are class indices.
using Target = std::variant<std::vector<double>, std::vector<int>>;

// Immutable feature matrix + target + naming; the unit of training and
// evaluation. Invariants checked at construction: row/target length match,
// n >= 2, p >= 1, distinct feature names, classification labels in 0..K-1.
class Dataset {
 public:
  Dataset(Matrix features, Target target, std::vector<std::string> feature_names,
          Task task, std::string provenance);

  std::size_t n() const { return features_.rows(); }
  std::size_t p() const { return features_.cols(); }

  const Matrix& features() const { return features_; }
  const Target& target() const { return target_; }
  const std::vector<double>& target_reg() const;  // throws DataError unless regression
  const std::vector<int>& target_cls() const;     // throws DataError unless classification
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const Task& task() const { return task_; }
  const std::string& provenance() const { return provenance_; }

  // Index of a named feature; throws DataError listing available names.
  std::size_t feature_index(const std::string& name) const;

 private:
  Matrix features_;
  Target target_;
  std::vector<std::string> feature_names_;
  Task task_;
  std::string provenance_;
};

enum class Nonlinearity { none, squares, interactions };

const char* nonlinearity_name(Nonlinearity nl);
Nonlinearity nonlinearity_from_name(const std::string& name);

// Generator settings for synthetic tabular data. Features are iid standard
// normal; the latent score combines per-feature signals of configurable
// strength plus Gaussian noise. Regression targets are the latent score;
// classification bins the score into K balanced classes.
struct SyntheticConfig {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> signal_weights;  // length p, non-negative, not all zero
  double noise_sd = 0.0;
  Nonlinearity nonlinearity = Nonlinearity::none;
  Task task = Task::regression();

  void validate() const;  // throws DataError
  std::string describe() const;
};

// Names x0..x{p-1}, used by the synthetic generator.
std::vector<std::string> default_feature_names(std::size_t p);

// CSV ingestion: comma-separated, first row header, '.' decimal, no quoting.
// Classification targets must be non-negative integers; K is inferred as
// max label + 1.
Dataset load_csv(const std::string& path, const std::string& target_column,
                 TaskKind task);

// Deterministic synthetic dataset; identical (config, seed) pairs yield
// bit-identical output.
Dataset gen_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Disjoint exhaustive row partition by seeded shuffle;
// train size = floor(n * train_fraction).
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed);

// n_out rows sampled without replacement, seeded.
Dataset subsample(const Dataset& data, std::size_t n_out, std::uint64_t seed);

// Copy with one named feature column removed.
Dataset drop_feature(const Dataset& data, const std::string& name);

// Writes the dataset in the CSV dialect load_csv reads (target last).
void write_csv(const Dataset& data, const std::string& path,
               const std::string& target_column = "target");

}  // namespace corrml
