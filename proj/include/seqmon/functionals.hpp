#pragma once

#include "seqmon/series.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace seqmon {

enum class FunctionalType { Mean, VechVariance, Quantile, Correlation };

/// A p-dimensional plug-in functional theta(F) of a d-dimensional distribution.
///
///   Mean(d)          p = d
///   VechVariance(d)  p = d(d+1)/2, population divisor, vech order (1,1),(1,2),(2,2),(1,3),...
///   Quantile(beta)   p = 1, d = 1, left-continuous generalized inverse X_(ceil(beta n))
///   Correlation      p = 1, d = 2, Pearson correlation of the two columns
class FunctionalKind {
 public:
  static FunctionalKind mean(Index d);
  static FunctionalKind vech_variance(Index d);
  static FunctionalKind quantile(double beta);
  static FunctionalKind correlation();

  /// Parses "mean", "var", "quantile:<beta>" or "corr" for input dimension d.
  static FunctionalKind parse(std::string_view text, Index d);

  FunctionalType type() const { return type_; }
  Index input_dim() const { return input_dim_; }
  Index output_dim() const { return output_dim_; }
  double beta() const { return beta_; }
  bool supports_prefix_cache() const { return type_ != FunctionalType::Quantile; }
  std::string name() const;

  friend bool operator==(const FunctionalKind&, const FunctionalKind&) = default;

 private:
  FunctionalKind(FunctionalType type, Index d, Index p, double beta)
      : type_(type), input_dim_(d), output_dim_(p), beta_(beta) {}

  FunctionalType type_;
  Index input_dim_;
  Index output_dim_;
  double beta_ = 0.0;
};

Index vech_size(Index d);
/// Stacks the upper triangle of a symmetric matrix column by column.
Eigen::VectorXd vech(const Eigen::MatrixXd& a);

/// Cumulative sums of the (shifted) rows, and of their vech outer products when
/// the functional needs second moments. Rows are shifted by the first row of
/// the series before accumulation; every supported functional is either
/// shift-equivariant or shift-invariant, and the shift keeps cancellation small.
/// Each sum is kept as an unevaluated pair hi + lo (compensated summation).
class PrefixCache {
 public:
  PrefixCache() = default;
  PrefixCache(Index dim, bool second_moments);

  /// Accumulates rows of `series` not yet covered.
  void extend(const Series& series);

  Index rows() const { return rows_; }
  Index dim() const { return dim_; }
  bool has_second_moments() const { return second_; }
  const Eigen::VectorXd& shift() const { return shift_; }

  /// S_x[t] (shifted), t = 0..rows(); leading part of the pair.
  Eigen::Map<const Eigen::VectorXd> sum(Index t) const {
    return Eigen::Map<const Eigen::VectorXd>(sx_.data() + t * dim_, dim_);
  }
  /// S_xx[t] (shifted, vech layout), t = 0..rows(); leading part of the pair.
  Eigen::Map<const Eigen::VectorXd> sum_sq(Index t) const {
    return Eigen::Map<const Eigen::VectorXd>(sxx_.data() + t * q_, q_);
  }
  /// Trailing (error) parts of the compensated sums.
  const double* sum_lo(Index t) const { return sx_lo_.data() + t * dim_; }
  const double* sum_sq_lo(Index t) const { return sxx_lo_.data() + t * q_; }

 private:
  Index dim_ = 0;
  Index q_ = 0;
  bool second_ = false;
  Index rows_ = 0;
  Eigen::VectorXd shift_;
  std::vector<double> sx_, sx_lo_;
  std::vector<double> sxx_, sxx_lo_;
};

/// Throws ConfigError for Quantile, which has no prefix structure.
PrefixCache build_prefix_cache(const Series& series, const FunctionalKind& kind);

/// theta(F_i^j) over a valid window 1 <= i <= j <= n. With a cache the window is
/// evaluated in O(1) (Mean, VechVariance, Correlation); without one the rows are
/// re-scanned with a two-pass algorithm.
Eigen::VectorXd estimate(const FunctionalKind& kind, const Series& series, Window w,
                         const PrefixCache* cache = nullptr);

struct MeanReference {
  Eigen::VectorXd mean;
};
struct VarianceReference {
  Eigen::VectorXd mean;
  Eigen::MatrixXd variance;
};
struct QuantileReference {
  double quantile = 0.0;
  double density = 0.0;
};
using InfluenceReference = std::variant<MeanReference, VarianceReference, QuantileReference>;

/// Influence function IF(x, F, theta) evaluated against the reference quantities of F.
/// Not used by the detectors; it backs the linearization checks in the tests.
Eigen::VectorXd influence(const FunctionalKind& kind, const Eigen::VectorXd& x,
                          const InfluenceReference& ref);

/// Window evaluation engine used by the detectors. Keeps a prefix cache in
/// sync with a growing series, memoizes the head estimates theta_1^z, and
/// applies the convention theta_z^u = 0 for z > u. Not thread-safe (the
/// quantile path reuses a scratch buffer); use one per stream.
class WindowEstimator {
 public:
  explicit WindowEstimator(FunctionalKind kind);

  const FunctionalKind& kind() const { return kind_; }
  Index output_dim() const { return kind_.output_dim(); }

  /// Brings the prefix cache up to date with the rows of `series`.
  void sync(const Series& series);

  /// Writes theta over rows [first, last] (1-based) into `out`. Returns false if
  /// the window is degenerate for the functional (correlation of a constant column).
  bool estimate(const Series& series, Index first, Index last, Eigen::Ref<Eigen::VectorXd> out);

  /// theta_1^z, memoized; nullptr when degenerate.
  const Eigen::VectorXd* head(const Series& series, Index z);

 private:
  FunctionalKind kind_;
  std::optional<PrefixCache> cache_;
  std::vector<double> scratch_;
  std::vector<Eigen::VectorXd> heads_;
  std::vector<char> head_state_;  // 0 unknown, 1 ok, 2 degenerate
};

}  // namespace seqmon
