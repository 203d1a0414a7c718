#pragma once

#include "seqmon/functionals.hpp"
#include "seqmon/series.hpp"

#include <Eigen/Core>

namespace seqmon {

/// Long-run variance estimate of the influence process on the training rows.
struct LrvEstimate {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd sigma_inv;
  double bandwidth = 0.0;
  Index m = 0;
  double rcond = 0.0;
};

/// Quadratic spectral kernel; k(0) = 1.
double qs_kernel(double x);

/// b_m = log10(m).
double default_bandwidth(Index m);

/// Kernel-weighted (quadratic spectral) autocovariance sum over all lags
/// 1..n-1 of the demeaned rows of z, divisor n at every lag. Throws
/// NonInvertibleError if the estimate fails the SPD check.
LrvEstimate qs_lrv(const Eigen::MatrixXd& z, double bandwidth);

/// Influence-proxy rows Z_t, t = 1..m, used to estimate the long-run variance of
/// the given functional:
///   mean         X_t - mean
///   var          vech((X_t - mean)(X_t - mean)^T) - V
///   quantile     (beta - 1{X_t <= q}) / f(q), f from a Gaussian kernel density
///                estimate at q with Silverman's bandwidth
///   correlation  x_t y_t - r/2 (x_t^2 + y_t^2) on standardized columns (delta-method
///                linearization of the Pearson coefficient)
Eigen::MatrixXd influence_proxy(const FunctionalKind& kind, const Series& series, Index m);

/// Gaussian kernel density estimate at x with Silverman's rule-of-thumb bandwidth.
double kernel_density_at(const Eigen::VectorXd& values, double x);

/// qs_lrv(influence_proxy(kind, series, m), default_bandwidth(m)).
LrvEstimate lrv_for_functional(const FunctionalKind& kind, const Series& series, Index m);

}  // namespace seqmon
