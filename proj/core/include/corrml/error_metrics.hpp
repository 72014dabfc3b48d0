#pragma once

#include <span>
#include <string>
#include <vector>

namespace corrml {

enum class ErrorKind { residual, indicator };

// Per-test-point errors of one model: signed residuals for regression,
// 0/1 mismatch indicators for classification.
struct ErrorVector {
  std::vector<double> values;
  ErrorKind kind = ErrorKind::residual;
  std::string model_label;
  std::string test_provenance;
};

// values[i] = y_true[i] - y_pred[i]
ErrorVector residual_errors(std::span<const double> y_true,
                            std::span<const double> y_pred,
                            std::string model_label = {},
                            std::string test_provenance = {});

// values[i] = 1 if labels differ, else 0
ErrorVector indicator_errors(std::span<const int> y_true,
                             std::span<const int> y_pred,
                             std::string model_label = {},
                             std::string test_provenance = {});

// Arithmetic mean of the error values; for indicator errors this is the
// error frequency (misclassification rate).
double average_error(const ErrorVector& e);

// One column per model label, aligned rows; consumed by external analysis.
std::string errors_to_csv(std::span<const ErrorVector> errors);
void write_errors_csv(std::span<const ErrorVector> errors, const std::string& path);

}  // namespace corrml
