#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corrml/error_metrics.hpp"
#include "corrml/matrix.hpp"

namespace corrml {

enum class CorrMethod { pearson, phik };

std::string_view corr_method_name(CorrMethod m);
CorrMethod corr_method_from_name(std::string_view name);

// A correlation estimate. Undefined values carry a reason instead of being
// coerced to zero; constant error vectors are common and must stay visible.
struct CorrValue {
  std::optional<double> value;
  CorrMethod method = CorrMethod::pearson;
  std::size_t n_points = 0;
  std::string undefined_reason;

  bool defined() const { return value.has_value(); }
  bool operator==(const CorrValue&) const = default;
};

CorrValue pearson(const std::vector<double>& x, const std::vector<double>& y);

struct ContingencyTable {
  std::vector<std::vector<std::int64_t>> counts;
  std::vector<int> row_labels;
  std::vector<int> col_labels;

  std::size_t rows() const { return counts.size(); }
  std::size_t cols() const { return counts.empty() ? 0 : counts[0].size(); }
  std::int64_t total() const;
  void validate() const;
};

ContingencyTable contingency(const std::vector<int>& a,
                             const std::vector<int>& b);

double chi2_stat(const ContingencyTable& t);

// The chi-squared statistic a binned standard bivariate normal with
// correlation rho would produce under the table's marginals. Strictly
// increasing in rho on [0,1); phik inverts it. Marginals are laid out in a
// canonical order, so the value is independent of category ordering.
double phik_chi2_bvn(const ContingencyTable& t, double rho);

CorrValue phik(const ContingencyTable& t, bool apply_pedestal = true);

enum class MethodChoice { automatic, pearson, phik };

class CorrelationMatrix {
 public:
  CorrelationMatrix(std::vector<std::string> labels, CorrMethod method);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  CorrMethod method() const { return method_; }
  const CorrValue& at(std::size_t i, std::size_t j) const;
  // Stores v at (i,j) and (j,i); the matrix is symmetric by construction.
  void set(std::size_t i, std::size_t j, CorrValue v);

  bool operator==(const CorrelationMatrix&) const = default;

 private:
  std::vector<std::string> labels_;
  CorrMethod method_;
  std::vector<CorrValue> entries_;
};

CorrelationMatrix corr_matrix(const std::vector<ErrorVector>& errors,
                              MethodChoice method = MethodChoice::automatic);

// Average errors of m encoders fine-tuned on each of d datasets.
struct PerformanceSeries {
  std::vector<std::string> encoder_labels;
  std::vector<std::string> dataset_labels;
  Matrix avg_errors;  // m x d

  void validate() const;
};

CorrValue def2_correlation(const PerformanceSeries& series,
                           std::string_view dataset_a,
                           std::string_view dataset_b);

}  // namespace corrml
