#pragma once

#include "seqmon/calibration.hpp"
#include "seqmon/csv.hpp"
#include "seqmon/datagen.hpp"
#include "seqmon/detectors.hpp"
#include "seqmon/functionals.hpp"
#include "seqmon/monitor.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace seqmon {

enum class Alternative { Mean, Variance, Correlation };

std::string_view to_string(Alternative alt);
Alternative parse_alternative(std::string_view text);

/// Grid of simulation cells. Each cell (model, m, T, param) is simulated
/// `replicates` times; every detector kind and threshold family is run on the
/// same simulated streams.
struct StudySpec {
  std::vector<std::string> models = {"M1"};
  std::vector<DetectorKind> kinds = {DetectorKind::D};
  std::vector<ThresholdFamily> families = {ThresholdFamily::T1};
  std::vector<Index> m = {100};
  std::vector<double> T = {1.0};
  std::string functional = "mean";
  Alternative alternative = Alternative::Mean;
  std::vector<double> params = {0.0};  // mu, delta or post-change correlation
  double alpha = 0.05;
  std::int64_t replicates = 5000;
  std::uint64_t seed = 1;
  std::optional<Index> change_offset;  // change row m + offset (default floor(m/2), +1 for var/corr)
  double c1 = 0.3;                     // pre-change innovation correlation (Corr models)
  std::string table = "tables/calibration.tsv";
  bool calibrate_missing = false;      // simulate absent calibration keys instead of failing

  static StudySpec from_toml(const std::string& text);
  static StudySpec load(const std::filesystem::path& path);
};

struct StudyRow {
  std::string model;
  DetectorKind kind = DetectorKind::D;
  ThresholdFamily family = ThresholdFamily::T1;
  Index m = 0;
  double T = 0.0;
  double param = 0.0;
  double reject_rate = 0.0;
  double mc_se = 0.0;
  double mean_tau = 0.0;      // NaN when no run qualifies
  double mean_runtime = 0.0;  // median wall-clock seconds per monitoring run
  std::int64_t rejections = 0;
  std::int64_t replicates = 0;
};

struct RunOutcome {
  bool rejected = false;
  Index tau = 0;
  Index location = 0;
  double runtime = 0.0;
};

/// One simulation cell. All configs must share m and T; the same
/// `replicates` streams (seeded by (seed, replicate)) feed every config.
/// Returns [config][replicate].
std::vector<std::vector<RunOutcome>> run_cell(const ModelSpec& model, const std::vector<MonitorConfig>& configs,
                                              std::int64_t replicates, std::uint64_t seed);

/// Change row used by a study for training size m.
Index study_change_row(const StudySpec& spec, Index m);

/// Builds the model for one cell.
ModelSpec study_model(const StudySpec& spec, const std::string& model, Index m, double param);

/// c_alpha for key, simulated on a coarse grid (100 steps, 5000 replicates)
/// and cached in `table` when absent and `calibrate_missing` is set.
double threshold_constant(CalibrationTable& table, const CalibrationKey& key, bool calibrate_missing);

std::vector<StudyRow> run_study(const StudySpec& spec, CalibrationTable& table);
void write_study_tsv(std::ostream& os, const std::vector<StudyRow>& rows);

/// Sequential real-data workflow: monitor, and after each rejection restart
/// with the m rows following the location estimate as the new training set.
struct DataWorkflowConfig {
  FunctionalKind functional = FunctionalKind::vech_variance(1);
  DetectorKind kind = DetectorKind::D;
  Index m = 255;
  ThresholdFamily family = ThresholdFamily::T1;
  double alpha = 0.05;
  std::optional<std::string> end_date;  // last monitored date (default: last row)
};

struct Detection {
  Index training_start = 0;  // 1-based first training row
  double T = 0.0;            // horizon factor of that run
  Index rejection_row = 0;   // 1-based
  std::string rejection_date;
  Index location_row = 0;    // 1-based
  std::string location_date;
};

/// Stability check of a candidate training set: nullopt when stable, otherwise
/// a 1-based change location inside the candidate. The default always passes.
using RetrospectiveTest = std::function<std::optional<Index>(const Series& candidate)>;

std::vector<Detection> run_data_workflow(const DatedSeries& data, const DataWorkflowConfig& config,
                                         CalibrationTable& table, const RetrospectiveTest& retrospective = {});

std::string detections_to_json(const std::vector<Detection>& detections, int indent = 2);

}  // namespace seqmon
