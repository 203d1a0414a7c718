#pragma once

#include "seqmon/functionals.hpp"
#include "seqmon/linalg.hpp"
#include "seqmon/lrv.hpp"
#include "seqmon/series.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace seqmon {

/// The five monitoring statistics. D, P and Q are normalized by a long-run
/// variance estimate from the training rows; DSN and PSN by the
/// self-normalizing matrix V.
enum class DetectorKind { D, P, Q, DSN, PSN };

std::string_view to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view text);
bool is_self_normalized(DetectorKind kind);

/// (u - z)(z - l)(theta_{l+1}^z - theta_{z+1}^u), 0 <= l <= z <= u <= n.
Eigen::VectorXd u_tilde(const Series& series, const FunctionalKind& kind, Index l, Index z, Index u);

struct DetectorDiagnostics {
  std::int64_t skipped_splits = 0;    // split points excluded from a max (singular V or degenerate window)
  std::int64_t undefined_steps = 0;   // steps at which every split was excluded
  std::int64_t degenerate_terms = 0;  // terms of V dropped because a window estimate was degenerate
  double min_rcond = std::numeric_limits<double>::infinity();
};

struct DetectorValue {
  double value = 0.0;
  bool defined = false;
  Index argmax = -1;  // split j attaining the max (smallest on ties)
};

/// Self-normalizing matrices
///   V(z,u) = sum_{i=1}^{z} i^2 (z-i)^2 (theta_1^i - theta_{i+1}^z)(.)^T
///          + sum_{i=z+1}^{u} (u-i)^2 (i-z)^2 (theta_{z+1}^i - theta_{i+1}^u)(.)^T.
/// The first sum depends on z only and is cached; the second is rebuilt per
/// (z, u) in O(u - z) window evaluations.
class SnNormalizer {
 public:
  explicit SnNormalizer(Index p);

  const Eigen::MatrixXd& first_sum(WindowEstimator& est, const Series& series, Index z);
  void matrix(WindowEstimator& est, const Series& series, Index z, Index u,
              Eigen::Ref<Eigen::MatrixXd> out);

  /// Makes V(m+j, m+k) available for j = 0..k-1 through current().
  void update(WindowEstimator& est, const Series& series, Index m, Index k);
  const std::vector<Eigen::MatrixXd>& current() const { return current_; }

  std::int64_t degenerate_terms() const { return degenerate_terms_; }

 private:
  Index p_;
  std::vector<Eigen::MatrixXd> first_;
  std::vector<char> first_ready_;
  std::vector<Eigen::MatrixXd> current_;
  Eigen::VectorXd a_, b_;
  std::int64_t degenerate_terms_ = 0;
};

/// Incremental evaluation of one detector on one stream. Holds the training
/// rows plus every monitoring row pushed so far; push() appends X_{m+k} and
/// returns the detector at the new k.
class DetectorState {
 public:
  DetectorState(DetectorKind kind, FunctionalKind functional, const Series& training,
                std::optional<LrvEstimate> lrv);

  DetectorValue push(const Eigen::Ref<const Eigen::VectorXd>& x);

  DetectorKind kind() const { return kind_; }
  const FunctionalKind& functional() const { return functional_; }
  Index m() const { return m_; }
  Index k() const { return k_; }
  const Series& series() const { return series_; }
  const DetectorDiagnostics& diagnostics() const { return diag_; }
  const std::optional<LrvEstimate>& lrv() const { return lrv_; }

  /// Split objectives of the current step, one per j = 0..k-1 (NaN where the
  /// split was excluded). For Q only j = 0 is populated.
  const std::vector<double>& split_values() const { return splits_; }

  /// Change location estimate m + argmax_j at the current step. Uses the D
  /// objective for D, P and Q and the DSN objective for DSN and PSN.
  Index locate();

 private:
  DetectorValue evaluate();
  double d_objective(Index j);
  double dsn_objective(Index j);

  DetectorKind kind_;
  FunctionalKind functional_;
  std::optional<LrvEstimate> lrv_;
  Index m_;
  Index k_ = 0;
  Series series_;
  WindowEstimator est_;
  std::optional<SnNormalizer> sn_;
  SpdFactor factor_;
  Eigen::VectorXd diff_, tail_;
  std::vector<double> splits_;
  DetectorDiagnostics diag_;
};

}  // namespace seqmon
