#include "corrml/error_metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "corrml/errors.hpp"
#include "util.hpp"

namespace corrml {

ErrorVector residual_errors(std::span<const double> y_true,
                            std::span<const double> y_pred,
                            std::string model_label,
                            std::string test_provenance) {
  if (y_true.size() != y_pred.size())
    throw DataError("residual_errors: length mismatch (" +
                    std::to_string(y_true.size()) + " vs " +
                    std::to_string(y_pred.size()) + ")");
  ErrorVector e;
  e.kind = ErrorKind::residual;
  e.model_label = std::move(model_label);
  e.test_provenance = std::move(test_provenance);
  e.values.resize(y_true.size());
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (!std::isfinite(y_true[i]) || !std::isfinite(y_pred[i]))
      throw DataError("residual_errors: non-finite input at index " + std::to_string(i));
    e.values[i] = y_true[i] - y_pred[i];
  }
  return e;
}

ErrorVector indicator_errors(std::span<const int> y_true,
                             std::span<const int> y_pred,
                             std::string model_label,
                             std::string test_provenance) {
  if (y_true.size() != y_pred.size())
    throw DataError("indicator_errors: length mismatch (" +
                    std::to_string(y_true.size()) + " vs " +
                    std::to_string(y_pred.size()) + ")");
  ErrorVector e;
  e.kind = ErrorKind::indicator;
  e.model_label = std::move(model_label);
  e.test_provenance = std::move(test_provenance);
  e.values.resize(y_true.size());
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    e.values[i] = (y_true[i] != y_pred[i]) ? 1.0 : 0.0;
  }
  return e;
}

double average_error(const ErrorVector& e) {
  if (e.values.empty()) throw DataError("average_error: empty error vector");
  double sum = 0.0;
  for (double v : e.values) sum += v;
  return sum / static_cast<double>(e.values.size());
}

std::string errors_to_csv(std::span<const ErrorVector> errors) {
  if (errors.empty()) throw DataError("errors_to_csv: no error vectors");
  const std::size_t m = errors.front().values.size();
  std::ostringstream out;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (errors[k].values.size() != m)
      throw DataError("errors_to_csv: length mismatch across models");
    if (k) out << ",";
    out << (errors[k].model_label.empty() ? "model_" + std::to_string(k)
                                          : errors[k].model_label);
  }
  out << "\n";
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < errors.size(); ++k) {
      if (k) out << ",";
      out << detail::format_double(errors[k].values[i]);
    }
    out << "\n";
  }
  return out.str();
}

void write_errors_csv(std::span<const ErrorVector> errors, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write file: " + path);
  f << errors_to_csv(errors);
}

}  // namespace corrml
