#include "seqmon/reference.hpp"

#include "seqmon/errors.hpp"
#include "seqmon/linalg.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace seqmon::reference {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Inverse via SVD, or nothing if the matrix is singular by the library's cutoff.
bool invert(const Eigen::MatrixXd& a, Eigen::MatrixXd& inv) {
  if (a.rows() == 1) {
    if (!(a(0, 0) > 0.0)) return false;
    inv = Eigen::MatrixXd::Constant(1, 1, 1.0 / a(0, 0));
    return true;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s.minCoeff() > kSingularRcond * s.maxCoeff())) return false;
  inv = svd.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  return true;
}

}  // namespace

bool window_estimate(const FunctionalKind& kind, const Series& series, Index first, Index last,
                     Eigen::VectorXd& out) {
  if (first > last) {
    out = Eigen::VectorXd::Zero(kind.output_dim());
    return true;
  }
  try {
    out = estimate(kind, series, Window{first, last});
  } catch (const DegenerateWindowError&) {
    return false;
  }
  return true;
}

Eigen::MatrixXd sn_matrix(const FunctionalKind& kind, const Series& series, Index z, Index u) {
  const Index p = kind.output_dim();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd a, b;
  for (Index j = 1; j <= z; ++j) {
    if (!window_estimate(kind, series, 1, j, a) || !window_estimate(kind, series, j + 1, z, b)) continue;
    const Eigen::VectorXd d = a - b;
    const double w = static_cast<double>(j) * j * static_cast<double>(z - j) * (z - j);
    v += w * d * d.transpose();
  }
  for (Index j = z + 1; j <= u; ++j) {
    if (!window_estimate(kind, series, z + 1, j, a) || !window_estimate(kind, series, j + 1, u, b)) continue;
    const Eigen::VectorXd d = a - b;
    const double w = static_cast<double>(u - j) * (u - j) * static_cast<double>(j - z) * (j - z);
    v += w * d * d.transpose();
  }
  return v;
}

std::vector<double> split_values(DetectorKind kind, const FunctionalKind& functional,
                                 const Series& series, Index m, Index k, const LrvEstimate* lrv) {
  if (!is_self_normalized(kind) && lrv == nullptr) throw ConfigError("D, P and Q need a long-run variance");
  if (m + k > series.size()) throw ConfigError("series too short for this step");
  const double md = static_cast<double>(m);
  std::vector<double> out(static_cast<std::size_t>(k), kNaN);
  const Index splits = kind == DetectorKind::Q ? 1 : k;
  Eigen::VectorXd before, after, inv_v;
  Eigen::MatrixXd vinv;
  for (Index j = 0; j < splits; ++j) {
    const bool anchored = kind == DetectorKind::P || kind == DetectorKind::Q || kind == DetectorKind::PSN;
    const Index head_end = anchored ? m : m + j;
    if (!window_estimate(functional, series, 1, head_end, before)) continue;
    if (!window_estimate(functional, series, m + j + 1, m + k, after)) continue;
    const Eigen::VectorXd d = before - after;
    const double mj = static_cast<double>(m + j);
    const double kj = static_cast<double>(k - j);
    double value = kNaN;
    switch (kind) {
      case DetectorKind::D:
        value = mj * mj * kj * kj * (d.transpose() * lrv->sigma_inv * d)(0, 0) / (md * md * md);
        break;
      case DetectorKind::P:
        value = kj * kj * (d.transpose() * lrv->sigma_inv * d)(0, 0) / md;
        break;
      case DetectorKind::Q:
        value = static_cast<double>(k) * k * (d.transpose() * lrv->sigma_inv * d)(0, 0) / md;
        break;
      case DetectorKind::DSN:
      case DetectorKind::PSN: {
        if (!invert(sn_matrix(functional, series, m + j, m + k), vinv)) break;
        const double q = (d.transpose() * vinv * d)(0, 0);
        value = kind == DetectorKind::DSN ? md * mj * mj * kj * kj * q : md * md * md * kj * kj * q;
        break;
      }
    }
    out[static_cast<std::size_t>(j)] = value;
  }
  return out;
}

DetectorValue detector_value(DetectorKind kind, const FunctionalKind& functional, const Series& series,
                             Index m, Index k, const LrvEstimate* lrv) {
  const auto values = split_values(kind, functional, series, m, k, lrv);
  DetectorValue out;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (std::isnan(values[j])) continue;
    if (!out.defined || values[j] > out.value) {
      out.value = values[j];
      out.argmax = static_cast<Index>(j);
      out.defined = true;
    }
  }
  return out;
}

}  // namespace seqmon::reference
