#include "seqmon/linalg.hpp"

#include "seqmon/errors.hpp"

namespace seqmon {

SpdFactor::SpdFactor(Eigen::Index p) : p_(p), llt_(p), tmp_(p) {}

bool SpdFactor::compute(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  if (a.rows() != a.cols()) throw ConfigError("normalizer must be square");
  if (a.rows() != p_) {
    p_ = a.rows();
    llt_ = Eigen::LLT<Eigen::MatrixXd>(p_);
    tmp_.resize(p_);
  }
  if (p_ == 1) {
    scalar_ = a(0, 0);
    ok_ = scalar_ > 0.0;
    rcond_ = ok_ ? 1.0 : 0.0;
    return ok_;
  }
  llt_.compute(a);
  if (llt_.info() != Eigen::Success) {
    ok_ = false;
    rcond_ = 0.0;
    return false;
  }
  rcond_ = llt_.rcond();
  ok_ = rcond_ >= kSingularRcond;
  return ok_;
}

double SpdFactor::inverse_quadratic(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (p_ == 1) return v[0] * v[0] / scalar_;
  tmp_ = v;
  llt_.matrixL().solveInPlace(tmp_);
  return tmp_.squaredNorm();
}

Eigen::MatrixXd SpdFactor::inverse() const {
  if (p_ == 1) return Eigen::MatrixXd::Constant(1, 1, 1.0 / scalar_);
  return llt_.solve(Eigen::MatrixXd::Identity(p_, p_));
}

}  // namespace seqmon
