#include "seqmon/harness.hpp"

#include "seqmon/errors.hpp"
#include "seqmon/rng.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace seqmon {

namespace {

std::uint64_t replicate_seed(std::uint64_t seed, std::int64_t r) {
  return splitmix64(splitmix64(seed) + static_cast<std::uint64_t>(r));
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// Accepts either a scalar or an array under `key`.
template <class T>
std::vector<T> list_of(const toml::table& tbl, std::string_view key, std::vector<T> fallback) {
  const auto* node = tbl.get(key);
  if (node == nullptr) return fallback;
  std::vector<T> out;
  auto take = [&](const toml::node& n) {
    if constexpr (std::is_same_v<T, std::string>) {
      auto v = n.value<std::string>();
      if (!v) throw ConfigError("study: '" + std::string(key) + "' must hold strings");
      out.push_back(*v);
    } else {
      auto v = n.value<T>();
      if (!v) throw ConfigError("study: '" + std::string(key) + "' must hold numbers");
      out.push_back(*v);
    }
  };
  if (const auto* arr = node->as_array()) {
    for (const auto& n : *arr) take(n);
  } else {
    take(*node);
  }
  if (out.empty()) throw ConfigError("study: '" + std::string(key) + "' is empty");
  return out;
}

bool alternative_active(const ModelSpec& model, Alternative alt) {
  switch (alt) {
    case Alternative::Mean: return model.mu != 0.0;
    case Alternative::Variance: return model.delta != 0.0;
    case Alternative::Correlation: return model.c2 != model.c1;
  }
  return false;
}

}  // namespace

std::string_view to_string(Alternative alt) {
  switch (alt) {
    case Alternative::Mean: return "mean";
    case Alternative::Variance: return "var";
    case Alternative::Correlation: return "corr";
  }
  return "?";
}

Alternative parse_alternative(std::string_view text) {
  if (text == "mean") return Alternative::Mean;
  if (text == "var") return Alternative::Variance;
  if (text == "corr") return Alternative::Correlation;
  throw ConfigError("unknown alternative '" + std::string(text) + "' (mean, var or corr)");
}

StudySpec StudySpec::from_toml(const std::string& text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& err) {
    throw ConfigError(std::string("study: ") + std::string(err.description()));
  }
  StudySpec s;
  s.models = list_of<std::string>(tbl, "models", s.models);
  s.kinds.clear();
  for (const auto& k : list_of<std::string>(tbl, "kinds", {"D"})) s.kinds.push_back(parse_detector_kind(k));
  s.families.clear();
  for (const auto& f : list_of<std::string>(tbl, "families", {"T1"})) s.families.push_back(parse_threshold_family(f));
  s.m.clear();
  for (auto v : list_of<std::int64_t>(tbl, "m", {100})) s.m.push_back(static_cast<Index>(v));
  s.T = list_of<double>(tbl, "T", s.T);
  s.params = list_of<double>(tbl, "params", s.params);
  s.functional = tbl["functional"].value_or(s.functional);
  s.alternative = parse_alternative(tbl["alternative"].value_or(std::string(to_string(s.alternative))));
  s.alpha = tbl["alpha"].value_or(s.alpha);
  s.replicates = tbl["replicates"].value_or(s.replicates);
  s.seed = static_cast<std::uint64_t>(tbl["seed"].value_or(static_cast<std::int64_t>(s.seed)));
  if (auto off = tbl["change_offset"].value<std::int64_t>()) s.change_offset = static_cast<Index>(*off);
  s.c1 = tbl["c1"].value_or(s.c1);
  s.table = tbl["table"].value_or(s.table);
  s.calibrate_missing = tbl["calibrate_missing"].value_or(s.calibrate_missing);
  if (s.replicates < 1) throw ConfigError("study: replicates must be positive");
  return s;
}

StudySpec StudySpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open study spec " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_toml(buf.str());
}

Index study_change_row(const StudySpec& spec, Index m) {
  if (spec.change_offset) return m + *spec.change_offset;
  return m + m / 2 + (spec.alternative == Alternative::Mean ? 0 : 1);
}

ModelSpec study_model(const StudySpec& spec, const std::string& model, Index m, double param) {
  ModelSpec out = ModelSpec::parse(model);
  out.change = study_change_row(spec, m);
  switch (spec.alternative) {
    case Alternative::Mean: out.mu = param; break;
    case Alternative::Variance: out.delta = param; break;
    case Alternative::Correlation:
      if (out.model != ModelKind::Corr) throw ConfigError("the correlation alternative needs a Corr model");
      out.c1 = spec.c1;
      out.c2 = param;
      break;
  }
  out.validate();
  return out;
}

std::vector<std::vector<RunOutcome>> run_cell(const ModelSpec& model, const std::vector<MonitorConfig>& configs,
                                              std::int64_t replicates, std::uint64_t seed) {
  if (configs.empty()) return {};
  const Index m = configs.front().m;
  const Index horizon = configs.front().horizon();
  for (const auto& c : configs) {
    c.validate();
    if (c.m != m || c.horizon() != horizon) throw ConfigError("configs of one cell must share m and T");
  }
  std::vector<std::vector<RunOutcome>> out(configs.size(), std::vector<RunOutcome>(static_cast<std::size_t>(replicates)));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t r = 0; r < replicates; ++r) {
    try {
      const Series series = generate(model, m + horizon, replicate_seed(seed, r));
      for (std::size_t i = 0; i < configs.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const MonitorReport rep = run(configs[i], series);
        const auto t1 = std::chrono::steady_clock::now();
        auto& o = out[i][static_cast<std::size_t>(r)];
        o.rejected = rep.rejected;
        o.tau = rep.tau.value_or(0);
        o.location = rep.location.value_or(0);
        o.runtime = std::chrono::duration<double>(t1 - t0).count();
      }
    } catch (...) {
#pragma omp critical(seqmon_cell_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double threshold_constant(CalibrationTable& table, const CalibrationKey& key, bool calibrate_missing) {
  if (const auto* e = table.find(key)) return e->c_alpha;
  if (!calibrate_missing) throw MissingCalibrationError("no calibration entry for " + key.describe());
  LimitGrid grid;
  grid.steps_per_unit = 100;
  grid.replicates = 5000;
  grid.seed = table.seed;
  grid.p = key.p;
  grid.T = key.T;
  const auto q = calibrate(key.kind, key.family, key.alpha, grid);
  CalibrationEntry e;
  e.key = key;
  e.c_alpha = q.value;
  e.se = q.se;
  e.steps_per_unit = grid.steps_per_unit;
  e.replicates = grid.replicates;
  e.seed = grid.seed;
  table.insert(e);
  return e.c_alpha;
}

std::vector<StudyRow> run_study(const StudySpec& spec, CalibrationTable& table) {
  std::vector<StudyRow> rows;
  for (const auto& model_name : spec.models) {
    const Index d = ModelSpec::parse(model_name).dim();
    const FunctionalKind functional = FunctionalKind::parse(spec.functional, d);
    for (Index m : spec.m) {
      for (double T : spec.T) {
        // Resolve every threshold before simulating so missing keys fail fast.
        std::vector<MonitorConfig> configs;
        for (auto kind : spec.kinds) {
          for (auto family : spec.families) {
            MonitorConfig c;
            c.kind = kind;
            c.functional = functional;
            c.m = m;
            c.T = T;
            c.family = family;
            c.alpha = spec.alpha;
            c.c_alpha = threshold_constant(table, c.calibration_key(), spec.calibrate_missing);
            configs.push_back(c);
          }
        }
        for (double param : spec.params) {
          const ModelSpec model = study_model(spec, model_name, m, param);
          const auto outcomes = run_cell(model, configs, spec.replicates, spec.seed);
          const bool has_change = alternative_active(model, spec.alternative);
          for (std::size_t i = 0; i < configs.size(); ++i) {
            StudyRow row;
            row.model = model.name();
            row.kind = configs[i].kind;
            row.family = configs[i].family;
            row.m = m;
            row.T = T;
            row.param = param;
            row.replicates = spec.replicates;
            double tau_sum = 0.0;
            std::int64_t tau_count = 0;
            std::vector<double> times;
            times.reserve(outcomes[i].size());
            for (const auto& o : outcomes[i]) {
              times.push_back(o.runtime);
              if (!o.rejected) continue;
              ++row.rejections;
              // Only rejections at or after the true change count towards the delay.
              if (!has_change || m + o.tau >= model.change) {
                tau_sum += static_cast<double>(o.tau);
                ++tau_count;
              }
            }
            const double n = static_cast<double>(spec.replicates);
            row.reject_rate = static_cast<double>(row.rejections) / n;
            row.mc_se = std::sqrt(row.reject_rate * (1.0 - row.reject_rate) / n);
            row.mean_tau = tau_count > 0 ? tau_sum / static_cast<double>(tau_count)
                                         : std::numeric_limits<double>::quiet_NaN();
            row.mean_runtime = median(std::move(times));
            rows.push_back(row);
          }
        }
      }
    }
  }
  return rows;
}

void write_study_tsv(std::ostream& os, const std::vector<StudyRow>& rows) {
  os << "model\tkind\tfamily\tm\tT\tparam\treject_rate\tmc_se\tmean_tau\tmean_runtime\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.model << '\t' << to_string(r.kind) << '\t' << to_string(r.family) << '\t' << r.m << '\t' << r.T << '\t'
       << r.param << '\t' << r.reject_rate << '\t' << r.mc_se << '\t';
    if (std::isnan(r.mean_tau)) {
      os << "NA";
    } else {
      os << r.mean_tau;
    }
    os << '\t' << r.mean_runtime << '\n';
  }
}

std::vector<Detection> run_data_workflow(const DatedSeries& data, const DataWorkflowConfig& config,
                                         CalibrationTable& table, const RetrospectiveTest& retrospective) {
  const Index n = data.values.size();
  const Index m = config.m;
  if (m < 2 || m > n) throw ConfigError("data workflow needs 2 <= m <= rows");
  if (config.functional.input_dim() != data.values.dim()) {
    throw ConfigError("functional dimension does not match the data columns");
  }
  Index end = n - 1;  // 0-based, inclusive
  if (config.end_date) {
    auto it = std::upper_bound(data.dates.begin(), data.dates.end(), *config.end_date);
    if (it == data.dates.begin()) throw ConfigError("end date precedes the data");
    end = static_cast<Index>(it - data.dates.begin()) - 1;
  }

  std::vector<Detection> out;
  Index start = 0;  // 0-based first training row
  while (start + m <= end) {
    const Series candidate = data.values.slice(start, m);
    if (retrospective) {
      if (auto loc = retrospective(candidate)) {
        if (*loc < 1 || *loc > m) throw ConfigError("retrospective test returned a location outside the candidate");
        start += *loc;
        continue;
      }
    }
    const Index horizon = end - (start + m) + 1;
    MonitorConfig mc;
    mc.kind = config.kind;
    mc.functional = config.functional;
    mc.m = m;
    mc.T = static_cast<double>(horizon) / static_cast<double>(m);
    mc.family = config.family;
    mc.alpha = config.alpha;
    // Thresholds are tabulated on T rounded to two decimals.
    CalibrationKey key = mc.calibration_key();
    key.T = std::round(mc.T * 100.0) / 100.0;
    if (key.T <= 0.0) key.T = 0.01;
    mc.c_alpha = threshold_constant(table, key, true);

    const MonitorReport rep = run(mc, data.values.slice(start, m + horizon));
    if (!rep.rejected) break;
    Detection det;
    det.training_start = start + 1;
    det.T = mc.T;
    det.rejection_row = start + m + *rep.tau;
    det.location_row = start + *rep.location;
    det.rejection_date = data.dates[static_cast<std::size_t>(det.rejection_row - 1)];
    det.location_date = data.dates[static_cast<std::size_t>(det.location_row - 1)];
    out.push_back(det);
    start = det.location_row;
  }
  return out;
}

std::string detections_to_json(const std::vector<Detection>& detections, int indent) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : detections) {
    arr.push_back({{"training_start", d.training_start},
                   {"T", d.T},
                   {"rejection_row", d.rejection_row},
                   {"rejection_date", d.rejection_date},
                   {"location_row", d.location_row},
                   {"location_date", d.location_date}});
  }
  return nlohmann::json({{"detections", arr}}).dump(indent);
}

}  // namespace seqmon
