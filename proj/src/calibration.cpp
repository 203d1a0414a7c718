#include "seqmon/calibration.hpp"

#include "seqmon/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace seqmon {

namespace {

constexpr std::string_view kMagic = "SEQMON_CALIBRATION";
constexpr std::string_view kColumns = "kind\tp\tT\tfamily\talpha\tc_alpha\tse\tsteps_per_unit\treplicates\tseed";

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw TableFormatError("calibration table: bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
}

template <bool Parallel>
std::vector<double> suprema_impl(DetectorKind kind, const LimitGrid& grid, ThresholdFamily family) {
  grid.last_index();
  const auto reps = grid.replicates;
  std::vector<double> out(static_cast<std::size_t>(reps));
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t r = 0; r < reps; ++r) {
      out[static_cast<std::size_t>(r)] = simulate_limit_path(kind, grid, family, static_cast<std::uint64_t>(r));
    }
  } else {
    for (std::int64_t r = 0; r < reps; ++r) {
      out[static_cast<std::size_t>(r)] = simulate_limit_path(kind, grid, family, static_cast<std::uint64_t>(r));
    }
  }
  return out;
}

}  // namespace

std::tuple<int, Index, long long, int, long long> CalibrationKey::ordinal() const {
  return {static_cast<int>(kind), p, std::llround(T * 1e6), static_cast<int>(family), std::llround(alpha * 1e9)};
}

std::string CalibrationKey::describe() const {
  std::ostringstream os;
  os << "kind=" << to_string(kind) << " p=" << p << " T=" << T << " family=" << to_string(family)
     << " alpha=" << alpha;
  return os.str();
}

bool operator==(const CalibrationEntry& a, const CalibrationEntry& b) {
  return a.key.kind == b.key.kind && a.key.p == b.key.p && a.key.T == b.key.T && a.key.family == b.key.family &&
         a.key.alpha == b.key.alpha && a.c_alpha == b.c_alpha && a.se == b.se &&
         a.steps_per_unit == b.steps_per_unit && a.replicates == b.replicates && a.seed == b.seed;
}

void CalibrationTable::insert(const CalibrationEntry& entry) { entries_[entry.key.ordinal()] = entry; }

const CalibrationEntry* CalibrationTable::find(const CalibrationKey& key) const {
  auto it = entries_.find(key.ordinal());
  return it == entries_.end() ? nullptr : &it->second;
}

double CalibrationTable::lookup(const CalibrationKey& key) const {
  const auto* e = find(key);
  if (e == nullptr) throw MissingCalibrationError("no calibration entry for " + key.describe());
  return e->c_alpha;
}

std::vector<CalibrationEntry> CalibrationTable::entries() const {
  std::vector<CalibrationEntry> out;
  out.reserve(entries_.size());
  for (const auto& [_, e] : entries_) out.push_back(e);
  return out;
}

bool operator==(const CalibrationTable& a, const CalibrationTable& b) {
  return a.default_steps_per_unit == b.default_steps_per_unit && a.default_replicates == b.default_replicates &&
         a.seed == b.seed && a.entries_ == b.entries_;
}

std::filesystem::path resolve_table_path(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return path / "calibration.tsv";
  return path;
}

std::string serialize_table(const CalibrationTable& table) {
  std::ostringstream os;
  os << kMagic << '\t' << kTableFormatVersion << '\n';
  os << "meta\tdefault_steps_per_unit\t" << table.default_steps_per_unit << '\n';
  os << "meta\tdefault_replicates\t" << table.default_replicates << '\n';
  os << "meta\tseed\t" << table.seed << '\n';
  os << "meta\torigin\tmonte-carlo\n";
  os << "columns\t" << kColumns << '\n';
  for (const auto& e : table.entries()) {
    os << "record\t" << to_string(e.key.kind) << '\t' << e.key.p << '\t' << format_double(e.key.T) << '\t'
       << to_string(e.key.family) << '\t' << format_double(e.key.alpha) << '\t' << format_double(e.c_alpha)
       << '\t' << format_double(e.se) << '\t' << e.steps_per_unit << '\t' << e.replicates << '\t' << e.seed
       << '\n';
  }
  return os.str();
}

CalibrationTable parse_table(const std::string& text) {
  CalibrationTable table;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw TableFormatError("calibration table: empty file");
  {
    const auto head = split_tabs(line);
    if (head.size() != 2 || head[0] != kMagic) throw TableFormatError("calibration table: missing magic header");
    const int version = parse_number<int>(head[1], "format version");
    if (version != kTableFormatVersion) {
      throw TableFormatError("calibration table: unsupported format version " + std::to_string(version));
    }
  }
  bool saw_columns = false;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (f[0] == "meta") {
      if (f.size() != 3) throw TableFormatError("calibration table: bad meta line " + std::to_string(line_no));
      if (f[1] == "default_steps_per_unit") {
        table.default_steps_per_unit = parse_number<Index>(f[2], "steps");
      } else if (f[1] == "default_replicates") {
        table.default_replicates = parse_number<std::int64_t>(f[2], "replicates");
      } else if (f[1] == "seed") {
        table.seed = parse_number<std::uint64_t>(f[2], "seed");
      }
    } else if (f[0] == "columns") {
      if (line.substr(8) != kColumns) throw TableFormatError("calibration table: unexpected column layout");
      saw_columns = true;
    } else if (f[0] == "record") {
      if (!saw_columns) throw TableFormatError("calibration table: record before column header");
      if (f.size() != 11) throw TableFormatError("calibration table: bad record at line " + std::to_string(line_no));
      CalibrationEntry e;
      try {
        e.key.kind = parse_detector_kind(f[1]);
        e.key.family = parse_threshold_family(f[4]);
      } catch (const ConfigError& err) {
        throw TableFormatError(std::string("calibration table: ") + err.what());
      }
      e.key.p = parse_number<Index>(f[2], "p");
      e.key.T = parse_number<double>(f[3], "T");
      e.key.alpha = parse_number<double>(f[5], "alpha");
      e.c_alpha = parse_number<double>(f[6], "c_alpha");
      e.se = parse_number<double>(f[7], "se");
      e.steps_per_unit = parse_number<Index>(f[8], "steps_per_unit");
      e.replicates = parse_number<std::int64_t>(f[9], "replicates");
      e.seed = parse_number<std::uint64_t>(f[10], "seed");
      table.insert(e);
    } else {
      throw TableFormatError("calibration table: unknown line type at line " + std::to_string(line_no));
    }
  }
  return table;
}

void save_table(const CalibrationTable& table, const std::filesystem::path& path) {
  auto target = path;
  if (std::filesystem::is_directory(path) || (!path.has_extension() && !std::filesystem::exists(path))) {
    std::filesystem::create_directories(path);
    target = path / "calibration.tsv";
  }
  std::ofstream os(target, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write calibration table " + target.string());
  os << serialize_table(table);
  if (!os) throw Error("failed writing calibration table " + target.string());
}

CalibrationTable load_table(const std::filesystem::path& path) {
  const auto target = resolve_table_path(path);
  std::ifstream is(target, std::ios::binary);
  if (!is) throw TableFormatError("cannot open calibration table " + target.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_table(buf.str());
}

std::vector<double> simulate_suprema(DetectorKind kind, const LimitGrid& grid, ThresholdFamily family) {
  return suprema_impl<true>(kind, grid, family);
}

namespace serial {
std::vector<double> simulate_suprema(DetectorKind kind, const LimitGrid& grid, ThresholdFamily family) {
  return suprema_impl<false>(kind, grid, family);
}
}  // namespace serial

std::vector<std::vector<double>> simulate_suprema(const std::vector<DetectorKind>& kinds,
                                                  const std::vector<ThresholdFamily>& families,
                                                  const LimitGrid& grid) {
  grid.last_index();
  const auto reps = grid.replicates;
  const std::size_t nf = families.size();
  std::vector<std::vector<double>> out(kinds.size() * nf, std::vector<double>(static_cast<std::size_t>(reps)));
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t r = 0; r < reps; ++r) {
    const BrownianPath path = replicate_path(grid, static_cast<std::uint64_t>(r));
    const auto profiles = limit_profiles(kinds, path);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      for (std::size_t f = 0; f < nf; ++f) {
        out[k * nf + f][static_cast<std::size_t>(r)] =
            profile_supremum(profiles[k], families[f], grid.steps_per_unit);
      }
    }
  }
  return out;
}

QuantileEstimate quantile_threshold(std::vector<double> suprema, double alpha) {
  check_alpha(alpha);
  if (suprema.empty()) throw ConfigError("no replicates to take a quantile of");
  const double r_count = static_cast<double>(suprema.size());
  const auto rank = static_cast<std::int64_t>(std::ceil((1.0 - alpha) * r_count - 1e-9));
  if (rank <= 0) return {0.0, 0.0};
  std::sort(suprema.begin(), suprema.end());
  auto at = [&](double r) {
    const auto i = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(r - 1e-9)), 1,
                                            static_cast<std::int64_t>(suprema.size()));
    return suprema[static_cast<std::size_t>(i - 1)];
  };
  QuantileEstimate q;
  q.value = suprema[static_cast<std::size_t>(rank - 1)];
  const double centre = (1.0 - alpha) * r_count;
  const double spread = std::sqrt(r_count * alpha * (1.0 - alpha));
  q.se = 0.5 * (at(centre + spread) - at(centre - spread));
  return q;
}

double exceedance_rate(const std::vector<double>& suprema, double c) {
  if (suprema.empty()) return 0.0;
  const auto n = std::count_if(suprema.begin(), suprema.end(), [c](double x) { return x > c; });
  return static_cast<double>(n) / static_cast<double>(suprema.size());
}

QuantileEstimate calibrate(DetectorKind kind, ThresholdFamily family, double alpha, const LimitGrid& grid) {
  check_alpha(alpha);
  return quantile_threshold(simulate_suprema(kind, grid, family), alpha);
}

void calibrate_into(CalibrationTable& table, const std::vector<DetectorKind>& kinds,
                    const std::vector<ThresholdFamily>& families, const std::vector<double>& alphas,
                    const LimitGrid& grid) {
  for (double a : alphas) check_alpha(a);
  const auto sups = simulate_suprema(kinds, families, grid);
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    for (std::size_t f = 0; f < families.size(); ++f) {
      for (double a : alphas) {
        const auto q = quantile_threshold(sups[k * families.size() + f], a);
        CalibrationEntry e;
        e.key = {kinds[k], grid.p, grid.T, families[f], a};
        e.c_alpha = q.value;
        e.se = q.se;
        e.steps_per_unit = grid.steps_per_unit;
        e.replicates = grid.replicates;
        e.seed = grid.seed;
        table.insert(e);
      }
    }
  }
}

}  // namespace seqmon
