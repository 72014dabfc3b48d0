#include "corrml/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>

#include "corrml/errors.hpp"
#include "corrml/normal.hpp"

namespace corrml {
namespace {

constexpr double kRhoMax = 1.0 - 1e-9;
constexpr double kRhoTol = 1e-6;
constexpr int kBisectMax = 200;

std::string fallback_label(const std::string& label, std::size_t k) {
  return label.empty() ? "model_" + std::to_string(k) : label;
}

}  // namespace

std::string_view corr_method_name(CorrMethod m) {
  switch (m) {
    case CorrMethod::pearson: return "pearson";
    case CorrMethod::phik: return "phik";
  }
  throw NumericError("unknown correlation method");
}

CorrMethod corr_method_from_name(std::string_view name) {
  if (name == "pearson") return CorrMethod::pearson;
  if (name == "phik") return CorrMethod::phik;
  throw DataError("unknown correlation method '" + std::string(name) + "'");
}

CorrValue pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw DataError("pearson: length mismatch (" + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()) + ")");
  if (x.size() < 2) throw DataError("pearson: need at least 2 points");

  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }

  CorrValue out;
  out.method = CorrMethod::pearson;
  out.n_points = n;
  if (sxx == 0.0 || syy == 0.0) {
    out.undefined_reason = "zero variance";
    return out;
  }
  double r = sxy / std::sqrt(sxx * syy);
  out.value = std::clamp(r, -1.0, 1.0);
  return out;
}

std::int64_t ContingencyTable::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (std::int64_t c : row) t += c;
  return t;
}

void ContingencyTable::validate() const {
  if (counts.empty() || counts[0].empty())
    throw DataError("contingency table: empty");
  const std::size_t c = counts[0].size();
  for (const auto& row : counts) {
    if (row.size() != c) throw DataError("contingency table: ragged rows");
    for (std::int64_t v : row)
      if (v < 0) throw DataError("contingency table: negative count");
  }
  if (!row_labels.empty() && row_labels.size() != rows())
    throw DataError("contingency table: row label count mismatch");
  if (!col_labels.empty() && col_labels.size() != cols())
    throw DataError("contingency table: column label count mismatch");
  if (total() < 1) throw DataError("contingency table: no observations");
}

ContingencyTable contingency(const std::vector<int>& a,
                             const std::vector<int>& b) {
  if (a.size() != b.size())
    throw DataError("contingency: length mismatch (" +
                    std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  if (a.empty()) throw DataError("contingency: empty input");

  std::set<int> ra(a.begin(), a.end());
  std::set<int> cb(b.begin(), b.end());
  ContingencyTable t;
  t.row_labels.assign(ra.begin(), ra.end());
  t.col_labels.assign(cb.begin(), cb.end());
  std::map<int, std::size_t> ri, ci;
  for (std::size_t i = 0; i < t.row_labels.size(); ++i)
    ri[t.row_labels[i]] = i;
  for (std::size_t j = 0; j < t.col_labels.size(); ++j)
    ci[t.col_labels[j]] = j;
  t.counts.assign(t.row_labels.size(),
                  std::vector<std::int64_t>(t.col_labels.size(), 0));
  for (std::size_t k = 0; k < a.size(); ++k) ++t.counts[ri[a[k]]][ci[b[k]]];
  return t;
}

double chi2_stat(const ContingencyTable& t) {
  t.validate();
  const std::size_t r = t.rows(), c = t.cols();
  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      double v = static_cast<double>(t.counts[i][j]);
      row_sum[i] += v;
      col_sum[j] += v;
      n += v;
    }
  for (double s : row_sum)
    if (s == 0.0) throw DataError("chi2_stat: zero row marginal");
  for (double s : col_sum)
    if (s == 0.0) throw DataError("chi2_stat: zero column marginal");

  double x2 = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      double e = row_sum[i] * col_sum[j] / n;
      double d = static_cast<double>(t.counts[i][j]) - e;
      x2 += d * d / e;
    }
  return x2;
}

namespace {

struct PhikBinning {
  std::vector<double> row_freq, col_freq;  // marginal frequencies
  std::vector<double> row_edge, col_edge;  // interior bin edges, sizes r-1, c-1
  double n = 0.0;
};

PhikBinning make_binning(const ContingencyTable& t) {
  const std::size_t r = t.rows(), c = t.cols();
  PhikBinning b;
  b.row_freq.assign(r, 0.0);
  b.col_freq.assign(c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      double v = static_cast<double>(t.counts[i][j]);
      b.row_freq[i] += v;
      b.col_freq[j] += v;
      b.n += v;
    }
  for (double& f : b.row_freq) f /= b.n;
  for (double& f : b.col_freq) f /= b.n;

  // Canonical bin order: the binned-normal model must not depend on how the
  // categories happen to be listed, so marginals are laid out largest first.
  std::sort(b.row_freq.begin(), b.row_freq.end(), std::greater<>());
  std::sort(b.col_freq.begin(), b.col_freq.end(), std::greater<>());

  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < r; ++i) {
    cum += b.row_freq[i];
    b.row_edge.push_back(normal_quantile(cum));
  }
  cum = 0.0;
  for (std::size_t j = 0; j + 1 < c; ++j) {
    cum += b.col_freq[j];
    b.col_edge.push_back(normal_quantile(cum));
  }
  return b;
}

// Chi-squared a bivariate normal with correlation rho produces under the
// binning, from corner CDF values so shared cell edges are evaluated once.
double chi2_of_bvn(const PhikBinning& b, double rho) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t r = b.row_freq.size(), c = b.col_freq.size();

  // corner(i,j) = P(X <= x_i, Y <= y_j), i in 0..r, j in 0..c
  std::vector<double> corner((r + 1) * (c + 1), 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& {
    return corner[i * (c + 1) + j];
  };
  for (std::size_t i = 1; i <= r; ++i) {
    double xi = i == r ? inf : b.row_edge[i - 1];
    for (std::size_t j = 1; j <= c; ++j) {
      double yj = j == c ? inf : b.col_edge[j - 1];
      if (i == r && j == c)
        at(i, j) = 1.0;
      else if (i == r)
        at(i, j) = normal_cdf(yj);
      else if (j == c)
        at(i, j) = normal_cdf(xi);
      else
        at(i, j) = bvn_rect_prob(rho, -inf, xi, -inf, yj);
    }
  }

  double x2 = 0.0;
  for (std::size_t i = 1; i <= r; ++i)
    for (std::size_t j = 1; j <= c; ++j) {
      double p = at(i, j) - at(i - 1, j) - at(i, j - 1) + at(i - 1, j - 1);
      double e = b.row_freq[i - 1] * b.col_freq[j - 1];
      double d = p - e;
      x2 += d * d / e;
    }
  return b.n * x2;
}

ContingencyTable strip_empty(const ContingencyTable& t) {
  const std::size_t r = t.rows(), c = t.cols();
  std::vector<std::int64_t> row_sum(r, 0), col_sum(c, 0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      row_sum[i] += t.counts[i][j];
      col_sum[j] += t.counts[i][j];
    }
  ContingencyTable out;
  for (std::size_t i = 0; i < r; ++i) {
    if (row_sum[i] == 0) continue;
    std::vector<std::int64_t> row;
    for (std::size_t j = 0; j < c; ++j)
      if (col_sum[j] != 0) row.push_back(t.counts[i][j]);
    out.counts.push_back(std::move(row));
    if (!t.row_labels.empty()) out.row_labels.push_back(t.row_labels[i]);
  }
  if (!t.col_labels.empty())
    for (std::size_t j = 0; j < c; ++j)
      if (col_sum[j] != 0) out.col_labels.push_back(t.col_labels[j]);
  return out;
}

}  // namespace

double phik_chi2_bvn(const ContingencyTable& t, double rho) {
  t.validate();
  if (!(rho >= 0.0 && rho < 1.0))
    throw NumericError("phik_chi2_bvn: rho must lie in [0,1)");
  return chi2_of_bvn(make_binning(t), rho);
}

CorrValue phik(const ContingencyTable& t, bool apply_pedestal) {
  t.validate();
  ContingencyTable s = strip_empty(t);

  CorrValue out;
  out.method = CorrMethod::phik;
  out.n_points = static_cast<std::size_t>(s.total());
  if (s.rows() < 2 || s.cols() < 2) {
    out.undefined_reason = "constant variable";
    return out;
  }

  double x2 = chi2_stat(s);
  if (apply_pedestal) {
    double dof = static_cast<double>((s.rows() - 1) * (s.cols() - 1));
    x2 = std::max(0.0, x2 - dof);
  }
  if (x2 == 0.0) {
    out.value = 0.0;
    return out;
  }

  PhikBinning binning = make_binning(s);
  if (x2 >= chi2_of_bvn(binning, kRhoMax)) {
    out.value = 1.0;
    return out;
  }

  double lo = 0.0, hi = kRhoMax;
  for (int it = 0; it < kBisectMax && hi - lo > kRhoTol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (chi2_of_bvn(binning, mid) < x2)
      lo = mid;
    else
      hi = mid;
  }
  out.value = 0.5 * (lo + hi);
  return out;
}

CorrelationMatrix::CorrelationMatrix(std::vector<std::string> labels,
                                     CorrMethod method)
    : labels_(std::move(labels)),
      method_(method),
      entries_(labels_.size() * labels_.size()) {
  std::set<std::string> seen;
  for (const auto& l : labels_)
    if (!seen.insert(l).second)
      throw DataError("correlation matrix: duplicate label '" + l + "'");
}

const CorrValue& CorrelationMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= size() || j >= size())
    throw DataError("correlation matrix: index out of range");
  return entries_[i * size() + j];
}

void CorrelationMatrix::set(std::size_t i, std::size_t j, CorrValue v) {
  if (i >= size() || j >= size())
    throw DataError("correlation matrix: index out of range");
  entries_[i * size() + j] = v;
  entries_[j * size() + i] = std::move(v);
}

CorrelationMatrix corr_matrix(const std::vector<ErrorVector>& errors,
                              MethodChoice method) {
  if (errors.size() < 2)
    throw DataError("corr_matrix: need at least two error vectors");
  const ErrorKind kind = errors[0].kind;
  const std::size_t n = errors[0].values.size();
  for (const auto& e : errors) {
    if (e.kind != kind) throw DataError("corr_matrix: mixed error kinds");
    if (e.values.size() != n)
      throw DataError("corr_matrix: error vector length mismatch");
  }
  if (n < 2) throw DataError("corr_matrix: need at least 2 points");

  CorrMethod m;
  switch (method) {
    case MethodChoice::automatic:
      m = kind == ErrorKind::residual ? CorrMethod::pearson : CorrMethod::phik;
      break;
    case MethodChoice::pearson:
      m = CorrMethod::pearson;
      break;
    case MethodChoice::phik:
      if (kind != ErrorKind::indicator)
        throw DataError("corr_matrix: phik requires indicator errors");
      m = CorrMethod::phik;
      break;
    default:
      throw DataError("corr_matrix: unknown method");
  }

  std::vector<std::string> labels;
  labels.reserve(errors.size());
  for (std::size_t k = 0; k < errors.size(); ++k)
    labels.push_back(fallback_label(errors[k].model_label, k));

  std::vector<std::vector<int>> cats;
  if (m == CorrMethod::phik) {
    cats.resize(errors.size());
    for (std::size_t k = 0; k < errors.size(); ++k) {
      cats[k].reserve(n);
      for (double v : errors[k].values)
        cats[k].push_back(static_cast<int>(std::llround(v)));
    }
  }

  auto constant = [&](std::size_t k) {
    const auto& v = errors[k].values;
    return std::all_of(v.begin(), v.end(),
                       [&](double x) { return x == v[0]; });
  };

  CorrelationMatrix out(std::move(labels), m);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    CorrValue diag;
    diag.method = m;
    diag.n_points = n;
    if (constant(i))
      diag.undefined_reason =
          m == CorrMethod::pearson ? "zero variance" : "constant variable";
    else
      diag.value = 1.0;
    out.set(i, i, diag);

    for (std::size_t j = i + 1; j < errors.size(); ++j) {
      CorrValue v = m == CorrMethod::pearson
                        ? pearson(errors[i].values, errors[j].values)
                        : phik(contingency(cats[i], cats[j]));
      if (m == CorrMethod::phik) v.n_points = n;
      out.set(i, j, std::move(v));
    }
  }
  return out;
}

void PerformanceSeries::validate() const {
  if (encoder_labels.size() != avg_errors.rows() ||
      dataset_labels.size() != avg_errors.cols())
    throw DataError("performance series: label/matrix shape mismatch");
  std::set<std::string> enc(encoder_labels.begin(), encoder_labels.end());
  std::set<std::string> ds(dataset_labels.begin(), dataset_labels.end());
  if (enc.size() != encoder_labels.size())
    throw DataError("performance series: duplicate encoder label");
  if (ds.size() != dataset_labels.size())
    throw DataError("performance series: duplicate dataset label");
  for (std::size_t i = 0; i < avg_errors.rows(); ++i)
    for (std::size_t j = 0; j < avg_errors.cols(); ++j)
      if (!std::isfinite(avg_errors(i, j)))
        throw DataError("performance series: non-finite average error");
}

CorrValue def2_correlation(const PerformanceSeries& series,
                           std::string_view dataset_a,
                           std::string_view dataset_b) {
  series.validate();
  const std::size_t m = series.encoder_labels.size();
  if (m < 3)
    throw DataError("def2_correlation: need at least 3 encoders, got " +
                    std::to_string(m));

  auto find = [&](std::string_view name) {
    for (std::size_t j = 0; j < series.dataset_labels.size(); ++j)
      if (series.dataset_labels[j] == name) return j;
    throw DataError("def2_correlation: unknown dataset label '" +
                    std::string(name) + "'");
  };
  std::size_t ja = find(dataset_a), jb = find(dataset_b);

  std::vector<double> a(m), b(m);
  for (std::size_t i = 0; i < m; ++i) {
    a[i] = series.avg_errors(i, ja);
    b[i] = series.avg_errors(i, jb);
  }

  if (ja == jb) {
    CorrValue out;
    out.method = CorrMethod::pearson;
    out.n_points = m;
    if (std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; }))
      out.undefined_reason = "zero variance";
    else
      out.value = 1.0;
    return out;
  }
  return pearson(a, b);
}

}  // namespace corrml
