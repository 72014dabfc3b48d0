#pragma once

namespace corrml {

double normal_pdf(double x);
double normal_cdf(double x);

// Inverse of normal_cdf on (0,1); accurate to ~1e-14.
double normal_quantile(double p);

// Probability mass of the standard bivariate normal with correlation rho
// over the rectangle (x_lo,x_hi] x (y_lo,y_hi]. Bounds may be +-infinity;
// semi-infinite limits are truncated at +-8.5 standard deviations.
// Absolute error <= 1e-8.
double bvn_rect_prob(double rho, double x_lo, double x_hi, double y_lo, double y_hi);

}  // namespace corrml
