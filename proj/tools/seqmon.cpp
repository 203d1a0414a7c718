// seqmon: command-line front end for calibration, monitoring, simulation,
// simulation studies and the sequential real-data workflow.

#include "seqmon/calibration.hpp"
#include "seqmon/csv.hpp"
#include "seqmon/datagen.hpp"
#include "seqmon/errors.hpp"
#include "seqmon/harness.hpp"
#include "seqmon/monitor.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace seqmon;

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << text << '\n';
}

std::vector<DetectorKind> kinds_from(const std::vector<std::string>& names) {
  std::vector<DetectorKind> out;
  for (const auto& n : names) {
    if (n == "all") return {DetectorKind::D, DetectorKind::P, DetectorKind::Q, DetectorKind::DSN, DetectorKind::PSN};
    out.push_back(parse_detector_kind(n));
  }
  return out;
}

std::vector<ThresholdFamily> families_from(const std::vector<std::string>& names) {
  std::vector<ThresholdFamily> out;
  for (const auto& n : names) {
    if (n == "all") return {kAllFamilies.begin(), kAllFamilies.end()};
    out.push_back(parse_threshold_family(n));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential change-point monitoring toolkit"};
  app.require_subcommand(1);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Simulate limit suprema and store threshold constants");
  std::vector<std::string> cal_kinds{"D"}, cal_families{"T1"};
  std::vector<double> cal_alphas{0.05};
  LimitGrid grid;
  std::string cal_out = "tables/";
  bool cal_fresh = false;
  cal->add_option("--kind", cal_kinds, "D, P, Q, DSN, PSN or all")->delimiter(',');
  cal->add_option("--p", grid.p, "Dimension of the functional")->check(CLI::PositiveNumber);
  cal->add_option("--T", grid.T, "Horizon factor");
  cal->add_option("--family", cal_families, "T1, T2, T3 or all")->delimiter(',');
  cal->add_option("--alpha", cal_alphas, "Levels")->delimiter(',');
  cal->add_option("--replicates", grid.replicates)->check(CLI::PositiveNumber);
  cal->add_option("--steps", grid.steps_per_unit, "Grid steps per unit time")->check(CLI::PositiveNumber);
  cal->add_option("--seed", grid.seed);
  cal->add_option("--out", cal_out, "Table file or directory (merged into if present)");
  cal->add_flag("--fresh", cal_fresh, "Overwrite instead of merging into an existing table");

  // monitor
  auto* mon = app.add_subcommand("monitor", "Monitor a CSV series");
  std::string mon_csv, mon_functional = "mean", mon_kind = "D", mon_family = "T1", mon_table = "tables/",
                       mon_out;
  Index mon_m = 100;
  double mon_T = 1.0, mon_alpha = 0.05;
  bool mon_dated = false;
  mon->add_option("--csv", mon_csv)->required();
  mon->add_flag("--dated", mon_dated, "First CSV column holds dates");
  mon->add_option("--functional", mon_functional, "mean, var, quantile:<beta> or corr");
  mon->add_option("--m", mon_m);
  mon->add_option("--T", mon_T);
  mon->add_option("--kind", mon_kind);
  mon->add_option("--family", mon_family);
  mon->add_option("--alpha", mon_alpha);
  mon->add_option("--table", mon_table);
  mon->add_option("--out", mon_out, "JSON report (stdout if omitted)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a series from a simulation model");
  std::string sim_model = "M1", sim_out;
  Index sim_n = 200;
  ModelSpec sim_spec;
  std::uint64_t sim_seed = 1;
  sim->add_option("--model", sim_model, "M1..M4, V1..V4, Corr or Corr:V2");
  sim->add_option("--n", sim_n)->check(CLI::PositiveNumber);
  sim->add_option("--mu", sim_spec.mu);
  sim->add_option("--delta", sim_spec.delta);
  sim->add_option("--c1", sim_spec.c1);
  sim->add_option("--c2", sim_spec.c2);
  sim->add_option("--change", sim_spec.change, "1-based first altered row (0: none)");
  sim->add_option("--seed", sim_seed);
  sim->add_option("--out", sim_out)->required();

  // study
  auto* stu = app.add_subcommand("study", "Run a simulation study described by a TOML file");
  std::string stu_spec, stu_out, stu_table;
  stu->add_option("--spec", stu_spec)->required();
  stu->add_option("--out", stu_out, "TSV output (stdout if omitted)");
  stu->add_option("--table", stu_table, "Overrides the table named in the spec");

  // data
  auto* dat = app.add_subcommand("data", "Sequential workflow on a dated CSV");
  std::string dat_csv, dat_functional = "var", dat_kind = "D", dat_family = "T1", dat_table = "tables/", dat_out,
                       dat_end;
  Index dat_m = 255;
  double dat_alpha = 0.05;
  bool dat_returns = false;
  dat->add_option("--csv", dat_csv)->required();
  dat->add_flag("--returns", dat_returns, "Convert prices to log-returns first");
  dat->add_option("--functional", dat_functional);
  dat->add_option("--m", dat_m);
  dat->add_option("--kind", dat_kind);
  dat->add_option("--family", dat_family);
  dat->add_option("--alpha", dat_alpha);
  dat->add_option("--end-date", dat_end);
  dat->add_option("--table", dat_table);
  dat->add_option("--out", dat_out, "JSON output (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cal) {
      CalibrationTable table;
      table.default_steps_per_unit = grid.steps_per_unit;
      table.default_replicates = grid.replicates;
      table.seed = grid.seed;
      const auto target = resolve_table_path(cal_out);
      if (!cal_fresh && std::filesystem::exists(target)) table = load_table(target);
      const auto t0 = std::chrono::steady_clock::now();
      calibrate_into(table, kinds_from(cal_kinds), families_from(cal_families), cal_alphas, grid);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      save_table(table, cal_out);
      for (auto kind : kinds_from(cal_kinds)) {
        for (auto family : families_from(cal_families)) {
          for (double a : cal_alphas) {
            const auto* e = table.find({kind, grid.p, grid.T, family, a});
            std::cout << to_string(kind) << "\tp=" << grid.p << "\tT=" << grid.T << '\t' << to_string(family)
                      << "\talpha=" << a << "\tc_alpha=" << e->c_alpha << "\tse=" << e->se << '\n';
          }
        }
      }
      std::cerr << "calibrated in " << secs << " s\n";
    } else if (*mon) {
      Series series;
      if (mon_dated) {
        series = read_dated_csv(std::filesystem::path(mon_csv)).values;
      } else {
        series = read_numeric_csv(std::filesystem::path(mon_csv)).rows;
      }
      MonitorConfig c;
      c.kind = parse_detector_kind(mon_kind);
      c.functional = FunctionalKind::parse(mon_functional, series.dim());
      c.m = mon_m;
      c.T = mon_T;
      c.family = parse_threshold_family(mon_family);
      c.alpha = mon_alpha;
      c.horizon();
      c.use_table(load_table(mon_table));
      write_text(mon_out, report_to_json(run(c, series)));
    } else if (*sim) {
      ModelSpec spec = ModelSpec::parse(sim_model);
      spec.mu = sim_spec.mu;
      spec.delta = sim_spec.delta;
      spec.c1 = sim_spec.c1;
      spec.c2 = sim_spec.c2;
      spec.change = sim_spec.change;
      write_numeric_csv(sim_out, generate(spec, sim_n, sim_seed));
    } else if (*stu) {
      StudySpec spec = StudySpec::load(stu_spec);
      if (!stu_table.empty()) spec.table = stu_table;
      CalibrationTable table = load_table(spec.table);
      const auto rows = run_study(spec, table);
      if (stu_out.empty()) {
        write_study_tsv(std::cout, rows);
      } else {
        std::ofstream os(stu_out);
        if (!os) throw Error("cannot write " + stu_out);
        write_study_tsv(os, rows);
      }
    } else if (*dat) {
      DatedSeries data = read_dated_csv(std::filesystem::path(dat_csv));
      if (dat_returns) data = to_log_returns(data);
      DataWorkflowConfig c;
      c.functional = FunctionalKind::parse(dat_functional, data.values.dim());
      c.kind = parse_detector_kind(dat_kind);
      c.m = dat_m;
      c.family = parse_threshold_family(dat_family);
      c.alpha = dat_alpha;
      if (!dat_end.empty()) c.end_date = dat_end;
      CalibrationTable table = load_table(dat_table);
      write_text(dat_out, detections_to_json(run_data_workflow(data, c, table)));
    }
  } catch (const std::exception& err) {
    std::cerr << "seqmon: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
