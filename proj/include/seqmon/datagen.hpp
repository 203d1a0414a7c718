#pragma once

#include "seqmon/series.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace seqmon {

/// Simulation models.
///   M1  iid N(0,1)
///   M2  X_t = 0.1 X_{t-1} + e_t
///   M3  X_t = e_t + 0.3 e_{t-1} - 0.1 e_{t-2}
///   M4  X_t = 0.3 X_{t-1} + e_t, e_t ~ Exp(1) (uncentred)
///   V1  iid N(0, I_2)
///   V2  X_t = A1 X_{t-1} + e_t
///   V3  X_t = e_t + A2 e_{t-1} + A3 e_{t-2}
///   V4  trivariate X_t = A4 X_{t-1} + e_t
///   Corr  bivariate V1/V2/V3 dynamics driven by unit-variance innovations whose
///         correlation switches from c1 to c2 at the change row
enum class ModelKind { M1, M2, M3, M4, V1, V2, V3, V4, Corr };

std::string_view to_string(ModelKind model);
ModelKind parse_model_kind(std::string_view text);

inline constexpr Index kBurnIn = 500;

struct ModelSpec {
  ModelKind model = ModelKind::M1;
  ModelKind corr_base = ModelKind::V1;  // Corr only: V1, V2 or V3
  double mu = 0.0;     // mean shift added to X_t from the change row on
  double delta = 0.0;  // innovation covariance (1 + delta) I from the change row on
  double c1 = 0.3;     // Corr only
  double c2 = 0.3;     // Corr only
  Index change = 0;    // 1-based first altered row; 0 means no change

  /// Parses "M1".."M4", "V1".."V4", "Corr" (base V1) or "Corr:V2" style names.
  static ModelSpec parse(std::string_view text);

  Index dim() const;
  std::string name() const;
  void validate() const;
};

/// Default change row m + floor(m/2).
inline Index default_change(Index m) { return m + m / 2; }

/// n rows of the model, bit-identical for a given (spec, n, seed). Every model
/// runs kBurnIn pre-sample steps first. Innovations are drawn in a fixed order
/// that does not depend on the alternative parameters, so rows before the
/// change row coincide across alternatives.
Series generate(const ModelSpec& spec, Index n, std::uint64_t seed);

}  // namespace seqmon
