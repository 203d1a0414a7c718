#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace seqmon {

/// Reciprocal condition number below which a normalizer counts as singular.
inline constexpr double kSingularRcond = 1e-12;

/// Cholesky factorization of a symmetric normalizing matrix with a fixed
/// singularity cutoff. Buffers are reused across compute() calls.
class SpdFactor {
 public:
  SpdFactor() = default;
  explicit SpdFactor(Eigen::Index p);

  /// Returns false when `a` is not positive definite or its reciprocal
  /// condition estimate is below kSingularRcond.
  bool compute(const Eigen::Ref<const Eigen::MatrixXd>& a);

  bool ok() const { return ok_; }
  double rcond() const { return rcond_; }

  /// v^T A^{-1} v for the last successfully factorized A.
  double inverse_quadratic(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  Eigen::MatrixXd inverse() const;

 private:
  Eigen::Index p_ = 0;
  bool ok_ = false;
  double rcond_ = 0.0;
  double scalar_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  mutable Eigen::VectorXd tmp_;
};

}  // namespace seqmon
