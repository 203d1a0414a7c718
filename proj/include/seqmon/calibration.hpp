#pragma once

#include "seqmon/detectors.hpp"
#include "seqmon/limit.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace seqmon {

struct CalibrationKey {
  DetectorKind kind = DetectorKind::D;
  Index p = 1;
  double T = 1.0;
  ThresholdFamily family = ThresholdFamily::T1;
  double alpha = 0.05;

  /// Ordering/identity: T is compared to 1e-6 and alpha to 1e-9.
  std::tuple<int, Index, long long, int, long long> ordinal() const;
  std::string describe() const;
};

struct CalibrationEntry {
  CalibrationKey key;
  double c_alpha = 0.0;
  double se = 0.0;  // Monte-Carlo standard error of c_alpha
  Index steps_per_unit = 0;
  std::int64_t replicates = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const CalibrationEntry& a, const CalibrationEntry& b);
};

/// Threshold constants keyed by (kind, p, T, family, alpha). Every record
/// keeps the grid it was simulated on; the table-level grid is the default
/// used when building it.
class CalibrationTable {
 public:
  Index default_steps_per_unit = 1000;
  std::int64_t default_replicates = 100000;
  std::uint64_t seed = 42;

  /// Inserts or replaces.
  void insert(const CalibrationEntry& entry);
  const CalibrationEntry* find(const CalibrationKey& key) const;
  /// c_alpha for key; throws MissingCalibrationError.
  double lookup(const CalibrationKey& key) const;

  std::vector<CalibrationEntry> entries() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const CalibrationTable& a, const CalibrationTable& b);

 private:
  std::map<std::tuple<int, Index, long long, int, long long>, CalibrationEntry> entries_;
};

inline constexpr int kTableFormatVersion = 1;

/// A directory argument resolves to <dir>/calibration.tsv.
std::filesystem::path resolve_table_path(const std::filesystem::path& path);

/// Line-delimited text: magic line, meta lines, a column header, one record
/// per entry. Doubles use shortest round-trip formatting, so save/load is
/// lossless.
void save_table(const CalibrationTable& table, const std::filesystem::path& path);
CalibrationTable load_table(const std::filesystem::path& path);
std::string serialize_table(const CalibrationTable& table);
CalibrationTable parse_table(const std::string& text);

/// Replicate suprema sup_t sup_s L(s,t) / shape(t-1), replicates run in parallel.
std::vector<double> simulate_suprema(DetectorKind kind, const LimitGrid& grid, ThresholdFamily family);

/// Suprema for every (kind, family) pair from one set of paths, indexed
/// [kind_index * families.size() + family_index][replicate].
std::vector<std::vector<double>> simulate_suprema(const std::vector<DetectorKind>& kinds,
                                                  const std::vector<ThresholdFamily>& families,
                                                  const LimitGrid& grid);

namespace serial {
/// Single-threaded reference with the identical per-replicate streams.
std::vector<double> simulate_suprema(DetectorKind kind, const LimitGrid& grid, ThresholdFamily family);
}  // namespace serial

struct QuantileEstimate {
  double value = 0.0;
  double se = 0.0;
};

/// Empirical (1-alpha)-quantile x_(ceil((1-alpha) R)) with the binomial
/// order-statistic standard error (x_(r+) - x_(r-)) / 2, r+- = (1-alpha) R +- sqrt(R alpha (1-alpha)).
/// alpha = 1 gives 0.
QuantileEstimate quantile_threshold(std::vector<double> suprema, double alpha);

/// Fraction of suprema strictly above c.
double exceedance_rate(const std::vector<double>& suprema, double c);

QuantileEstimate calibrate(DetectorKind kind, ThresholdFamily family, double alpha, const LimitGrid& grid);

/// Calibrates every (kind, family, alpha) combination on one replicate set and
/// stores the results.
void calibrate_into(CalibrationTable& table, const std::vector<DetectorKind>& kinds,
                    const std::vector<ThresholdFamily>& families, const std::vector<double>& alphas,
                    const LimitGrid& grid);

}  // namespace seqmon
