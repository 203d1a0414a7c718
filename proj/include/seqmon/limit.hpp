#pragma once

#include "seqmon/detectors.hpp"
#include "seqmon/series.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace seqmon {

/// Threshold shapes w(t) = c_alpha * shape(t):
///   T1  1
///   T2  (t+1)^2
///   T3  (t+1)^2 * max(sqrt(t/(t+1)), 1e-10)
enum class ThresholdFamily { T1, T2, T3 };
inline constexpr std::array<ThresholdFamily, 3> kAllFamilies = {ThresholdFamily::T1, ThresholdFamily::T2,
                                                                ThresholdFamily::T3};

std::string_view to_string(ThresholdFamily family);
ThresholdFamily parse_threshold_family(std::string_view text);
double threshold_shape(ThresholdFamily family, double t);

/// Discretization of [0, T+1] and Monte-Carlo settings for the limit processes.
struct LimitGrid {
  Index steps_per_unit = 1000;
  std::int64_t replicates = 100000;
  std::uint64_t seed = 42;
  Index p = 1;
  double T = 1.0;

  /// steps_per_unit * (T + 1); throws ConfigError unless integral.
  Index last_index() const;
  Index points() const { return last_index() + 1; }
};

/// A p-dimensional standard Brownian motion sampled at i / steps_per_unit,
/// i = 0..last_index, built from scaled partial sums of N(0,1) increments.
class BrownianPath {
 public:
  BrownianPath(Index dim, Index steps_per_unit, Index last_index);

  static BrownianPath simulate(Index dim, Index steps_per_unit, Index last_index, std::mt19937_64& rng);

  /// Every `factor`-th grid point; the result is again an exact Brownian path.
  BrownianPath coarsen(Index factor) const;

  Index dim() const { return dim_; }
  Index steps_per_unit() const { return steps_; }
  Index last_index() const { return last_; }
  double time(Index i) const { return static_cast<double>(i) / static_cast<double>(steps_); }

  double operator()(Index c, Index i) const { return w_[static_cast<std::size_t>(c * (last_ + 1) + i)]; }
  double& operator()(Index c, Index i) { return w_[static_cast<std::size_t>(c * (last_ + 1) + i)]; }
  const double* component(Index c) const { return w_.data() + c * (last_ + 1); }

 private:
  Index dim_;
  Index steps_;
  Index last_;
  std::vector<double> w_;  // component-major
};

/// Inner suprema sup_{s in [1, t]} L(s, t) of the limit functional of `kind`
/// at every grid time t in [1, T+1] (index 0 <-> t = 1). With
/// B(s, t) = t W(s) - s W(t):
///   D    |B(s,t)|^2
///   Q    |B(t,1)|^2                           (no inner sup)
///   P    |B(1,s) + B(t,1)|^2
///   DSN  B^T (N1(s) + N2(s,t))^{-1} B
///   PSN  (B(1,s) + B(t,1))^T (N1(s) + N2(s,t))^{-1} (.)
/// N1, N2 are left-Riemann sums on the path grid, evaluated in O(p^2) per
/// (s, t) from prefix sums. Singular normalizers skip that (s, t).
std::vector<double> limit_profile(DetectorKind kind, const BrownianPath& path);

/// limit_profile for several kinds over one path; DSN and PSN share their
/// normalizer factorizations.
std::vector<std::vector<double>> limit_profiles(const std::vector<DetectorKind>& kinds, const BrownianPath& path);

/// sup_t profile(t) / shape(t - 1).
double profile_supremum(const std::vector<double>& profile, ThresholdFamily family, Index steps_per_unit);

/// One replicate of the normalized supremum, replicate index selecting the RNG stream.
double simulate_limit_path(DetectorKind kind, const LimitGrid& grid, ThresholdFamily family,
                           std::uint64_t replicate);

/// Path for replicate `replicate` of `grid`.
BrownianPath replicate_path(const LimitGrid& grid, std::uint64_t replicate);

namespace reference {

/// L(s, t) at grid indices, with N1 and N2 accumulated term by term.
double limit_functional(DetectorKind kind, const BrownianPath& path, Index s_idx, Index t_idx);

/// Brute-force limit_profile: every (s, t) through limit_functional.
std::vector<double> limit_profile(DetectorKind kind, const BrownianPath& path);

}  // namespace reference

}  // namespace seqmon
