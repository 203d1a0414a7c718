#pragma once

// Straight-from-the-definition implementations kept as test oracles and as
// the serial baseline for the benchmark. Nothing here is on a hot path.

#include "seqmon/detectors.hpp"
#include "seqmon/functionals.hpp"
#include "seqmon/lrv.hpp"
#include "seqmon/series.hpp"

#include <Eigen/Core>

#include <vector>

namespace seqmon::reference {

/// theta over rows [first, last] re-scanned from the series; zero for an empty
/// window. Returns false for a degenerate window.
bool window_estimate(const FunctionalKind& kind, const Series& series, Index first, Index last,
                     Eigen::VectorXd& out);

/// Literal double sum defining V(z, u).
Eigen::MatrixXd sn_matrix(const FunctionalKind& kind, const Series& series, Index z, Index u);

/// One detector value at step k (series must hold at least m + k rows),
/// evaluated over every split with explicit matrix inverses and no caching.
/// `lrv` is required for D, P and Q.
DetectorValue detector_value(DetectorKind kind, const FunctionalKind& functional,
                             const Series& series, Index m, Index k, const LrvEstimate* lrv);

/// All split objectives at step k (NaN where excluded).
std::vector<double> split_values(DetectorKind kind, const FunctionalKind& functional,
                                 const Series& series, Index m, Index k, const LrvEstimate* lrv);

}  // namespace seqmon::reference
