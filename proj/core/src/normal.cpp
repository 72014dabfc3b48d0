#include "corrml/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "corrml/errors.hpp"

namespace corrml {
namespace {

constexpr double kTailClamp = 8.5;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kInvSqrt2 = 0.7071067811865476;

// Gauss-Legendre nodes and weights on [-1,1], computed once via Newton
// iteration on the Legendre recurrence.
struct GlRule {
  std::vector<double> node;
  std::vector<double> weight;
};

GlRule make_gl_rule(int n) {
  GlRule r;
  r.node.resize(n);
  r.weight.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.node[i] = x;
    r.weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

const GlRule& gl8() {
  static const GlRule r = make_gl_rule(8);
  return r;
}

const GlRule& gl16() {
  static const GlRule r = make_gl_rule(16);
  return r;
}

struct BvnDensity {
  double rho;
  double inv_two_q;  // 1 / (2 (1 - rho^2))
  double norm;       // 1 / (2 pi sqrt(1 - rho^2))

  explicit BvnDensity(double r)
      : rho(r),
        inv_two_q(1.0 / (2.0 * (1.0 - r * r))),
        norm(1.0 / (2.0 * M_PI * std::sqrt(1.0 - r * r))) {}

  double operator()(double x, double y) const {
    double q = x * x - 2.0 * rho * x * y + y * y;
    return norm * std::exp(-q * inv_two_q);
  }
};

double tensor_panel(const GlRule& r, const BvnDensity& f, double ax, double bx,
                    double ay, double by) {
  double hx = 0.5 * (bx - ax), cx = 0.5 * (bx + ax);
  double hy = 0.5 * (by - ay), cy = 0.5 * (by + ay);
  double sum = 0.0;
  for (std::size_t i = 0; i < r.node.size(); ++i) {
    double x = cx + hx * r.node[i];
    double row = 0.0;
    for (std::size_t j = 0; j < r.node.size(); ++j)
      row += r.weight[j] * f(x, cy + hy * r.node[j]);
    sum += r.weight[i] * row;
  }
  return sum * hx * hy;
}

double adaptive_2d(const BvnDensity& f, double ax, double bx, double ay,
                   double by, double tol, int depth) {
  double coarse = tensor_panel(gl8(), f, ax, bx, ay, by);
  double fine = tensor_panel(gl16(), f, ax, bx, ay, by);
  if (std::abs(fine - coarse) <= tol || depth >= 28) return fine;
  double mx = 0.5 * (ax + bx), my = 0.5 * (ay + by);
  double t = tol / 4.0;
  return adaptive_2d(f, ax, mx, ay, my, t, depth + 1) +
         adaptive_2d(f, mx, bx, ay, my, t, depth + 1) +
         adaptive_2d(f, ax, mx, my, by, t, depth + 1) +
         adaptive_2d(f, mx, bx, my, by, t, depth + 1);
}

// Conditional-CDF reduction used when the density ridge is too narrow for
// the tensor rule: integrates phi(x) * (Phi((y_hi - rho x)/s) - Phi((y_lo - rho x)/s)).
struct CondSlice {
  double rho;
  double inv_s;  // 1 / sqrt(1 - rho^2)
  double y_lo, y_hi;

  double operator()(double x) const {
    double a = (y_lo - rho * x) * inv_s;
    double b = (y_hi - rho * x) * inv_s;
    return normal_pdf(x) * (normal_cdf(b) - normal_cdf(a));
  }
};

double line_panel(const GlRule& r, const CondSlice& f, double a, double b) {
  double h = 0.5 * (b - a), c = 0.5 * (b + a);
  double sum = 0.0;
  for (std::size_t i = 0; i < r.node.size(); ++i)
    sum += r.weight[i] * f(c + h * r.node[i]);
  return sum * h;
}

double adaptive_1d(const CondSlice& f, double a, double b, double tol,
                   int depth) {
  double coarse = line_panel(gl8(), f, a, b);
  double fine = line_panel(gl16(), f, a, b);
  if (std::abs(fine - coarse) <= tol || depth >= 48) return fine;
  double m = 0.5 * (a + b);
  return adaptive_1d(f, a, m, tol / 2.0, depth + 1) +
         adaptive_1d(f, m, b, tol / 2.0, depth + 1);
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw NumericError("normal_quantile: p must lie in (0,1)");

  // Acklam's rational approximation, then one Newton step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  for (int it = 0; it < 2; ++it) {
    double e = normal_cdf(x) - p;
    double u = e / normal_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double bvn_rect_prob(double rho, double x_lo, double x_hi, double y_lo,
                     double y_hi) {
  if (!(rho > -1.0 && rho < 1.0))
    throw NumericError("bvn_rect_prob: rho must lie in (-1,1)");
  if (std::isnan(x_lo) || std::isnan(x_hi) || std::isnan(y_lo) ||
      std::isnan(y_hi))
    throw NumericError("bvn_rect_prob: NaN bound");
  if (x_lo > x_hi || y_lo > y_hi)
    throw NumericError("bvn_rect_prob: bounds out of order");

  double ax = std::clamp(x_lo, -kTailClamp, kTailClamp);
  double bx = std::clamp(x_hi, -kTailClamp, kTailClamp);
  double ay = std::clamp(y_lo, -kTailClamp, kTailClamp);
  double by = std::clamp(y_hi, -kTailClamp, kTailClamp);
  if (ax >= bx || ay >= by) return 0.0;

  const double tol = 1e-10;

  if (std::abs(rho) > 0.99) {
    // Near-singular covariance: the 2d rule cannot resolve the ridge, so
    // reduce over the conditional distribution of y given x. The conditional
    // CDF steps inside a layer of width ~sqrt(1-rho^2) around x = y/rho;
    // panels are cut there so the step cannot hide between quadrature nodes.
    double s = std::sqrt(1.0 - rho * rho);
    CondSlice f{rho, 1.0 / s, ay, by};
    std::vector<double> cuts;
    for (double x = ax; x < bx; x += 1.0) cuts.push_back(x);
    cuts.push_back(bx);
    double w = 64.0 * s / std::abs(rho);
    for (double t : {ay, by}) {
      double c = t / rho;
      for (double p : {c - w, c, c + w})
        if (p > ax && p < bx) cuts.push_back(p);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double piece_tol = tol / static_cast<double>(cuts.size());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      total += adaptive_1d(f, cuts[k], cuts[k + 1], piece_tol, 0);
    return total;
  }

  BvnDensity f(rho);
  int nx = std::max(1, static_cast<int>(std::ceil((bx - ax) / 4.0)));
  int ny = std::max(1, static_cast<int>(std::ceil((by - ay) / 4.0)));
  double sx = (bx - ax) / nx, sy = (by - ay) / ny;
  double panel_tol = tol / (nx * ny);
  double total = 0.0;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      total += adaptive_2d(f, ax + i * sx, ax + (i + 1) * sx, ay + j * sy,
                           ay + (j + 1) * sy, panel_tol, 0);
  return total;
}

}  // namespace corrml
