#include "seqmon/lrv.hpp"

#include "seqmon/errors.hpp"
#include "seqmon/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace seqmon {

double qs_kernel(double x) {
  const double a = 6.0 * std::numbers::pi * x / 5.0;
  const double a2 = a * a;
  if (std::abs(a) < 1e-3) return 1.0 - a2 / 10.0 + a2 * a2 / 280.0;
  return 3.0 / a2 * (std::sin(a) / a - std::cos(a));
}

double default_bandwidth(Index m) {
  if (m < 2) throw ConfigError("bandwidth rule needs m >= 2");
  return std::log10(static_cast<double>(m));
}

LrvEstimate qs_lrv(const Eigen::MatrixXd& z, double bandwidth) {
  const Index n = z.rows();
  const Index p = z.cols();
  if (n < 2) throw ConfigError("long-run variance needs at least 2 rows");
  if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");

  const Eigen::MatrixXd c = z.rowwise() - z.colwise().mean();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
  for (Index a = 0; a < p; ++a)
    for (Index b = 0; b <= a; ++b) sigma(a, b) = c.col(a).dot(c.col(b));

  Eigen::MatrixXd gamma(p, p);
  for (Index lag = 1; lag < n; ++lag) {
    const double w = qs_kernel(static_cast<double>(lag) / bandwidth);
    const Index len = n - lag;
    // gamma(a, b) = sum_t c(t + lag, a) c(t, b)
    for (Index a = 0; a < p; ++a)
      for (Index b = 0; b < p; ++b)
        gamma(a, b) = c.col(a).segment(lag, len).dot(c.col(b).head(len));
    for (Index a = 0; a < p; ++a)
      for (Index b = 0; b <= a; ++b) sigma(a, b) += w * (gamma(a, b) + gamma(b, a));
  }
  sigma /= static_cast<double>(n);
  sigma.triangularView<Eigen::StrictlyUpper>() = sigma.transpose().triangularView<Eigen::StrictlyUpper>();

  SpdFactor factor(p);
  if (!factor.compute(sigma)) {
    throw NonInvertibleError("long-run variance estimate is singular (reciprocal condition " +
                             std::to_string(factor.rcond()) + ")");
  }
  LrvEstimate out;
  out.sigma = sigma;
  out.sigma_inv = factor.inverse();
  out.sigma_inv.triangularView<Eigen::StrictlyUpper>() =
      out.sigma_inv.transpose().triangularView<Eigen::StrictlyUpper>();
  out.bandwidth = bandwidth;
  out.m = n;
  out.rcond = factor.rcond();
  return out;
}

double kernel_density_at(const Eigen::VectorXd& values, double x) {
  const Index n = values.size();
  if (n < 2) throw ConfigError("density estimate needs at least 2 values");
  const double mean = values.mean();
  const double sd = std::sqrt((values.array() - mean).square().sum() / static_cast<double>(n - 1));
  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  auto order_stat = [&](double prob) {
    const double pos = prob * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = order_stat(0.75) - order_stat(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  if (!(h > 0.0)) throw NonInvertibleError("density estimate undefined for constant data");
  double acc = 0.0;
  for (Index t = 0; t < n; ++t) {
    const double u = (x - values[t]) / h;
    acc += std::exp(-0.5 * u * u);
  }
  return acc / (static_cast<double>(n) * h * std::sqrt(2.0 * std::numbers::pi));
}

Eigen::MatrixXd influence_proxy(const FunctionalKind& kind, const Series& series, Index m) {
  if (m < 2 || m > series.size()) throw ConfigError("training size must satisfy 2 <= m <= n");
  if (series.dim() != kind.input_dim()) throw ConfigError("functional/series dimension mismatch");
  const Index d = series.dim();
  const Eigen::MatrixXd x = series.slice(0, m).to_matrix();
  switch (kind.type()) {
    case FunctionalType::Mean:
      return x.rowwise() - x.colwise().mean();
    case FunctionalType::VechVariance: {
      const Eigen::RowVectorXd mu = x.colwise().mean();
      Eigen::MatrixXd z(m, vech_size(d));
      for (Index t = 0; t < m; ++t) {
        const Eigen::VectorXd c = (x.row(t) - mu).transpose();
        z.row(t) = vech(c * c.transpose()).transpose();
      }
      return z.rowwise() - z.colwise().mean();
    }
    case FunctionalType::Quantile: {
      const Eigen::VectorXd v = x.col(0);
      const double q = estimate(kind, series, Window{1, m})[0];
      const double f = kernel_density_at(v, q);
      if (!(f > 0.0)) throw NonInvertibleError("density estimate at the quantile is zero");
      Eigen::MatrixXd z(m, 1);
      for (Index t = 0; t < m; ++t) z(t, 0) = (kind.beta() - (v[t] <= q ? 1.0 : 0.0)) / f;
      return z;
    }
    case FunctionalType::Correlation: {
      const Eigen::RowVectorXd mu = x.colwise().mean();
      const Eigen::MatrixXd c = x.rowwise() - mu;
      const double sx = std::sqrt(c.col(0).squaredNorm() / static_cast<double>(m));
      const double sy = std::sqrt(c.col(1).squaredNorm() / static_cast<double>(m));
      if (!(sx > 0.0) || !(sy > 0.0)) {
        throw DegenerateWindowError("constant column in the training sample");
      }
      const Eigen::VectorXd xs = c.col(0) / sx;
      const Eigen::VectorXd ys = c.col(1) / sy;
      const double r = xs.dot(ys) / static_cast<double>(m);
      Eigen::MatrixXd z(m, 1);
      z.col(0) = xs.cwiseProduct(ys) - 0.5 * r * (xs.cwiseAbs2() + ys.cwiseAbs2());
      return z;
    }
  }
  throw ConfigError("unknown functional");
}

LrvEstimate lrv_for_functional(const FunctionalKind& kind, const Series& series, Index m) {
  return qs_lrv(influence_proxy(kind, series, m), default_bandwidth(m));
}

}  // namespace seqmon
