#include "seqmon/detectors.hpp"

#include "seqmon/errors.hpp"

#include <cmath>
#include <string>

namespace seqmon {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sq(double x) { return x * x; }
}  // namespace

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::D: return "D";
    case DetectorKind::P: return "P";
    case DetectorKind::Q: return "Q";
    case DetectorKind::DSN: return "DSN";
    case DetectorKind::PSN: return "PSN";
  }
  return "?";
}

DetectorKind parse_detector_kind(std::string_view text) {
  if (text == "D") return DetectorKind::D;
  if (text == "P") return DetectorKind::P;
  if (text == "Q") return DetectorKind::Q;
  if (text == "DSN") return DetectorKind::DSN;
  if (text == "PSN") return DetectorKind::PSN;
  throw ConfigError("unknown detector kind '" + std::string(text) + "'");
}

bool is_self_normalized(DetectorKind kind) {
  return kind == DetectorKind::DSN || kind == DetectorKind::PSN;
}

Eigen::VectorXd u_tilde(const Series& series, const FunctionalKind& kind, Index l, Index z, Index u) {
  if (l < 0 || l > z || z > u || u > series.size()) throw ConfigError("u_tilde needs 0 <= l <= z <= u <= n");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kind.output_dim());
  if (z == l || u == z) return out;
  const Eigen::VectorXd left = estimate(kind, series, Window{l + 1, z});
  const Eigen::VectorXd right = estimate(kind, series, Window{z + 1, u});
  return static_cast<double>(u - z) * static_cast<double>(z - l) * (left - right);
}

// ---------------------------------------------------------------------------
// SnNormalizer

SnNormalizer::SnNormalizer(Index p) : p_(p), a_(p), b_(p) {}

const Eigen::MatrixXd& SnNormalizer::first_sum(WindowEstimator& est, const Series& series, Index z) {
  const auto idx = static_cast<std::size_t>(z);
  if (first_.size() <= idx) {
    first_.resize(idx + 1);
    first_ready_.resize(idx + 1, 0);
  }
  if (!first_ready_[idx]) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p_, p_);
    for (Index i = 1; i < z; ++i) {
      const Eigen::VectorXd* head = est.head(series, i);
      if (head == nullptr || !est.estimate(series, i + 1, z, b_)) {
        ++degenerate_terms_;
        continue;
      }
      a_ = *head - b_;
      acc.noalias() += sq(static_cast<double>(i)) * sq(static_cast<double>(z - i)) * a_ * a_.transpose();
    }
    first_[idx] = std::move(acc);
    first_ready_[idx] = 1;
  }
  return first_[idx];
}

void SnNormalizer::matrix(WindowEstimator& est, const Series& series, Index z, Index u,
                          Eigen::Ref<Eigen::MatrixXd> out) {
  out = first_sum(est, series, z);
  for (Index i = z + 1; i < u; ++i) {
    if (!est.estimate(series, z + 1, i, a_) || !est.estimate(series, i + 1, u, b_)) {
      ++degenerate_terms_;
      continue;
    }
    a_ -= b_;
    out.noalias() += sq(static_cast<double>(u - i)) * sq(static_cast<double>(i - z)) * a_ * a_.transpose();
  }
}

void SnNormalizer::update(WindowEstimator& est, const Series& series, Index m, Index k) {
  if (m + k > series.size()) throw ConfigError("SN update beyond the observed rows");
  current_.resize(static_cast<std::size_t>(k));
  for (Index j = 0; j < k; ++j) {
    auto& v = current_[static_cast<std::size_t>(j)];
    v.resize(p_, p_);
    matrix(est, series, m + j, m + k, v);
  }
}

// ---------------------------------------------------------------------------
// DetectorState

DetectorState::DetectorState(DetectorKind kind, FunctionalKind functional, const Series& training,
                             std::optional<LrvEstimate> lrv)
    : kind_(kind),
      functional_(functional),
      lrv_(std::move(lrv)),
      m_(training.size()),
      series_(training),
      est_(functional),
      factor_(functional.output_dim()),
      diff_(functional.output_dim()),
      tail_(functional.output_dim()) {
  if (training.dim() != functional.input_dim()) {
    throw ConfigError("training rows do not match the functional's input dimension");
  }
  if (m_ < 2) throw ConfigError("monitoring needs at least 2 training rows");
  const Index p = functional.output_dim();
  if (is_self_normalized(kind_)) {
    sn_.emplace(p);
  } else {
    if (!lrv_) lrv_ = lrv_for_functional(functional_, training, m_);
    if (lrv_->sigma_inv.rows() != p || lrv_->sigma_inv.cols() != p) {
      throw ConfigError("long-run variance has the wrong dimension for this functional");
    }
  }
  est_.sync(series_);
}

DetectorValue DetectorState::push(const Eigen::Ref<const Eigen::VectorXd>& x) {
  series_.append(x);
  est_.sync(series_);
  ++k_;
  return evaluate();
}

double DetectorState::d_objective(Index j) {
  const Eigen::VectorXd* head = est_.head(series_, m_ + j);
  if (head == nullptr || !est_.estimate(series_, m_ + j + 1, m_ + k_, tail_)) return kNaN;
  diff_ = *head - tail_;
  tail_.noalias() = lrv_->sigma_inv * diff_;
  const double w = sq(static_cast<double>(m_ + j)) * sq(static_cast<double>(k_ - j));
  return w * diff_.dot(tail_) / std::pow(static_cast<double>(m_), 3);
}

double DetectorState::dsn_objective(Index j) {
  const auto& v = sn_->current()[static_cast<std::size_t>(j)];
  if (!factor_.compute(v)) return kNaN;
  const Eigen::VectorXd* head = est_.head(series_, m_ + j);
  if (head == nullptr || !est_.estimate(series_, m_ + j + 1, m_ + k_, tail_)) return kNaN;
  diff_ = *head - tail_;
  const double w = sq(static_cast<double>(m_ + j)) * sq(static_cast<double>(k_ - j));
  return static_cast<double>(m_) * w * factor_.inverse_quadratic(diff_);
}

DetectorValue DetectorState::evaluate() {
  const double m = static_cast<double>(m_);
  splits_.assign(static_cast<std::size_t>(k_), kNaN);
  const Eigen::VectorXd* train = est_.head(series_, m_);

  if (is_self_normalized(kind_)) sn_->update(est_, series_, m_, k_);

  const Index last_split = kind_ == DetectorKind::Q ? 1 : k_;
  for (Index j = 0; j < last_split; ++j) {
    double value = kNaN;
    switch (kind_) {
      case DetectorKind::D:
        value = d_objective(j);
        break;
      case DetectorKind::DSN:
        value = dsn_objective(j);
        break;
      case DetectorKind::Q:
      case DetectorKind::P: {
        if (train == nullptr || !est_.estimate(series_, m_ + j + 1, m_ + k_, tail_)) break;
        diff_ = *train - tail_;
        tail_.noalias() = lrv_->sigma_inv * diff_;
        const double w = kind_ == DetectorKind::Q ? sq(static_cast<double>(k_))
                                                  : sq(static_cast<double>(k_ - j));
        value = w * diff_.dot(tail_) / m;
        break;
      }
      case DetectorKind::PSN: {
        const auto& v = sn_->current()[static_cast<std::size_t>(j)];
        if (train == nullptr || !factor_.compute(v)) break;
        if (!est_.estimate(series_, m_ + j + 1, m_ + k_, tail_)) break;
        diff_ = *train - tail_;
        value = m * m * m * sq(static_cast<double>(k_ - j)) * factor_.inverse_quadratic(diff_);
        break;
      }
    }
    if (is_self_normalized(kind_) && factor_.ok()) {
      diag_.min_rcond = std::min(diag_.min_rcond, factor_.rcond());
    }
    splits_[static_cast<std::size_t>(j)] = value;
  }
  if (sn_) diag_.degenerate_terms = sn_->degenerate_terms();

  DetectorValue out;
  for (Index j = 0; j < last_split; ++j) {
    const double v = splits_[static_cast<std::size_t>(j)];
    if (std::isnan(v)) {
      ++diag_.skipped_splits;
      continue;
    }
    if (!out.defined || v > out.value) {
      out.value = v;
      out.argmax = j;
      out.defined = true;
    }
  }
  if (!out.defined) {
    out.value = 0.0;
    ++diag_.undefined_steps;
  }
  return out;
}

Index DetectorState::locate() {
  if (k_ < 1) throw ConfigError("locate needs at least one monitoring step");
  const bool use_sn = is_self_normalized(kind_);
  Index best = 0;
  double best_value = -1.0;
  for (Index j = 0; j < k_; ++j) {
    double v = 0.0;
    if (kind_ == DetectorKind::D || kind_ == DetectorKind::DSN) {
      v = splits_[static_cast<std::size_t>(j)];
    } else {
      v = use_sn ? dsn_objective(j) : d_objective(j);
    }
    if (!std::isnan(v) && v > best_value) {
      best_value = v;
      best = j;
    }
  }
  return m_ + best;
}

}  // namespace seqmon
