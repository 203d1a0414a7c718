#pragma once

#include "seqmon/calibration.hpp"
#include "seqmon/detectors.hpp"
#include "seqmon/functionals.hpp"
#include "seqmon/limit.hpp"
#include "seqmon/lrv.hpp"
#include "seqmon/series.hpp"

#include <optional>
#include <string>
#include <vector>

namespace seqmon {

struct MonitorConfig {
  DetectorKind kind = DetectorKind::D;
  FunctionalKind functional = FunctionalKind::mean(1);
  Index m = 100;
  double T = 1.0;
  ThresholdFamily family = ThresholdFamily::T1;
  double alpha = 0.05;
  double c_alpha = 0.0;
  /// Replaces the long-run variance estimated from the training rows (D, P, Q only).
  std::optional<LrvEstimate> lrv;

  /// Number of monitoring rows T*m; throws ConfigError unless integral.
  Index horizon() const;
  void validate() const;
  CalibrationKey calibration_key() const;
  /// Sets c_alpha from the table entry for this configuration.
  void use_table(const CalibrationTable& table);

  /// w(k/m) = c_alpha * shape(k/m).
  double threshold(Index k) const;
};

enum class StepOutcome { Continue, Reject, HorizonReached };

struct StepResult {
  StepOutcome outcome = StepOutcome::Continue;
  Index k = 0;
  double value = 0.0;
  double threshold = 0.0;
  bool defined = true;
};

struct TrajectoryPoint {
  Index k = 0;
  double value = 0.0;
  double threshold = 0.0;
  bool defined = true;
};

struct MonitorReport {
  bool rejected = false;
  std::optional<Index> tau;       // monitoring step of the first exceedance
  std::optional<Index> location;  // estimated last pre-change row (1-based), present iff rejected
  std::vector<TrajectoryPoint> trajectory;
  Index m = 0;
  Index horizon = 0;
  double c_alpha = 0.0;
  DetectorKind kind = DetectorKind::D;
  ThresholdFamily family = ThresholdFamily::T1;
  DetectorDiagnostics diagnostics;

  friend bool operator==(const MonitorReport& a, const MonitorReport& b);
};

/// Closed-end monitoring of one stream: feed monitoring rows through step()
/// until it returns Reject or HorizonReached.
class Monitor {
 public:
  Monitor(MonitorConfig config, const Series& training);

  StepResult step(const Eigen::Ref<const Eigen::VectorXd>& x);
  bool finished() const { return finished_; }
  Index k() const { return state_.k(); }

  /// Location estimate at the current step.
  Index locate() { return state_.locate(); }

  MonitorReport report() const;
  const MonitorConfig& config() const { return config_; }
  const DetectorState& state() const { return state_; }

 private:
  MonitorConfig config_;
  Index horizon_;
  DetectorState state_;
  bool finished_ = false;
  MonitorReport report_;
};

/// Trains on rows 1..m of `series` and monitors rows m+1..m+T*m (or until the
/// series ends).
MonitorReport run(const MonitorConfig& config, const Series& series);

std::string report_to_json(const MonitorReport& report, int indent = 2);

}  // namespace seqmon
