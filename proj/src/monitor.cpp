#include "seqmon/monitor.hpp"

#include "seqmon/errors.hpp"

#include <json.hpp>

#include <cmath>

namespace seqmon {

Index MonitorConfig::horizon() const {
  if (m < 2) throw ConfigError("training size m must be at least 2");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("horizon factor T must be positive");
  const double x = T * static_cast<double>(m);
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, x) || r < 1.0) {
    throw ConfigError("T * m must be a positive integer");
  }
  return static_cast<Index>(r);
}

void MonitorConfig::validate() const {
  horizon();
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (!(c_alpha >= 0.0) || !std::isfinite(c_alpha)) throw ConfigError("c_alpha must be finite and non-negative");
  if (lrv && is_self_normalized(kind)) throw ConfigError("self-normalized detectors take no long-run variance");
}

CalibrationKey MonitorConfig::calibration_key() const {
  return CalibrationKey{kind, functional.output_dim(), T, family, alpha};
}

void MonitorConfig::use_table(const CalibrationTable& table) { c_alpha = table.lookup(calibration_key()); }

double MonitorConfig::threshold(Index k) const {
  return c_alpha * threshold_shape(family, static_cast<double>(k) / static_cast<double>(m));
}

bool operator==(const MonitorReport& a, const MonitorReport& b) {
  if (a.rejected != b.rejected || a.tau != b.tau || a.location != b.location || a.m != b.m ||
      a.horizon != b.horizon || a.c_alpha != b.c_alpha || a.kind != b.kind || a.family != b.family ||
      a.trajectory.size() != b.trajectory.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    const auto& x = a.trajectory[i];
    const auto& y = b.trajectory[i];
    if (x.k != y.k || x.value != y.value || x.threshold != y.threshold || x.defined != y.defined) return false;
  }
  const auto& d = a.diagnostics;
  const auto& e = b.diagnostics;
  return d.skipped_splits == e.skipped_splits && d.undefined_steps == e.undefined_steps &&
         d.degenerate_terms == e.degenerate_terms && d.min_rcond == e.min_rcond;
}

namespace {

Series checked_training(const MonitorConfig& config, const Series& training) {
  config.validate();
  if (training.size() != config.m) throw ConfigError("training set must hold exactly m rows");
  return training;
}

}  // namespace

Monitor::Monitor(MonitorConfig config, const Series& training)
    : config_(std::move(config)),
      horizon_(config_.horizon()),
      state_(config_.kind, config_.functional, checked_training(config_, training), config_.lrv) {
  report_.m = config_.m;
  report_.horizon = horizon_;
  report_.c_alpha = config_.c_alpha;
  report_.kind = config_.kind;
  report_.family = config_.family;
}

StepResult Monitor::step(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (finished_) throw ConfigError("monitoring has already stopped");
  const DetectorValue v = state_.push(x);
  StepResult out;
  out.k = state_.k();
  out.value = v.value;
  out.defined = v.defined;
  out.threshold = config_.threshold(out.k);
  report_.trajectory.push_back({out.k, out.value, out.threshold, out.defined});
  if (v.defined && out.value > out.threshold) {
    out.outcome = StepOutcome::Reject;
    report_.rejected = true;
    report_.tau = out.k;
    report_.location = state_.locate();
    finished_ = true;
  } else if (out.k >= horizon_) {
    out.outcome = StepOutcome::HorizonReached;
    finished_ = true;
  }
  report_.diagnostics = state_.diagnostics();
  return out;
}

MonitorReport Monitor::report() const { return report_; }

MonitorReport run(const MonitorConfig& config, const Series& series) {
  if (series.size() < config.m) throw ConfigError("series has fewer rows than the training size m");
  Monitor mon(config, series.slice(0, config.m));
  const Index last = std::min(series.size(), config.m + config.horizon());
  for (Index t = config.m; t < last && !mon.finished(); ++t) mon.step(series.row(t));
  return mon.report();
}

std::string report_to_json(const MonitorReport& report, int indent) {
  using nlohmann::json;
  json j;
  j["rejected"] = report.rejected;
  j["tau"] = report.tau ? json(*report.tau) : json(nullptr);
  j["location"] = report.location ? json(*report.location) : json(nullptr);
  j["m"] = report.m;
  j["horizon"] = report.horizon;
  j["c_alpha"] = report.c_alpha;
  j["kind"] = std::string(to_string(report.kind));
  j["family"] = std::string(to_string(report.family));
  json traj = json::array();
  for (const auto& p : report.trajectory) {
    traj.push_back({{"k", p.k}, {"value", p.value}, {"threshold", p.threshold}, {"defined", p.defined}});
  }
  j["trajectory"] = std::move(traj);
  const auto& d = report.diagnostics;
  j["diagnostics"] = {{"skipped_splits", d.skipped_splits},
                      {"undefined_steps", d.undefined_steps},
                      {"degenerate_terms", d.degenerate_terms},
                      {"min_rcond", std::isfinite(d.min_rcond) ? json(d.min_rcond) : json(nullptr)}};
  return j.dump(indent);
}

}  // namespace seqmon
