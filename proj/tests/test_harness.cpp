#include "seqmon/errors.hpp"
#include "seqmon/harness.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace seqmon;
using seqmon::test::random_series;

namespace {

std::string iso_date(int day) {
  // Consecutive days from 2000-01-01; months are flattened to 28 days, which
  // keeps the dates valid and increasing.
  const int year = 2000 + day / (12 * 28);
  const int month = 1 + (day / 28) % 12;
  const int dom = 1 + day % 28;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, dom);
  return buf;
}

DatedSeries dated(const Eigen::MatrixXd& x) {
  DatedSeries d;
  for (Index t = 0; t < x.rows(); ++t) d.dates.push_back(iso_date(static_cast<int>(t)));
  for (Index c = 0; c < x.cols(); ++c) d.header.push_back("x" + std::to_string(c + 1));
  d.values = Series::from_matrix(x);
  return d;
}

CalibrationTable small_table(const std::vector<Index>& ps, double T) {
  CalibrationTable t;
  for (Index p : ps) {
    LimitGrid g;
    g.steps_per_unit = 100;
    g.replicates = 4000;
    g.p = p;
    g.T = T;
    calibrate_into(t, {DetectorKind::D, DetectorKind::P, DetectorKind::Q}, {ThresholdFamily::T1}, {0.05}, g);
  }
  return t;
}

}  // namespace

TEST_CASE("numeric csv round trip") {
  const auto path = std::filesystem::temp_directory_path() / "seqmon_roundtrip.csv";
  const Series s = random_series(25, 3, 4, 1e3);
  write_numeric_csv(path, s, {"a", "b", "c"});
  const NumericTable back = read_numeric_csv(path);
  CHECK(back.header == std::vector<std::string>{"a", "b", "c"});
  CHECK(back.rows.to_matrix() == s.to_matrix());
  std::filesystem::remove(path);
}

TEST_CASE("malformed csv") {
  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS_AS(read_numeric_csv(ragged), CsvError);
  std::istringstream text("a\n1\nfoo\n");
  CHECK_THROWS_AS(read_numeric_csv(text), CsvError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_numeric_csv(empty), CsvError);
  std::istringstream back("date,p\n2020-01-02,1\n2020-01-01,2\n");
  CHECK_THROWS_AS(read_dated_csv(back), CsvError);
  std::istringstream repeat("date,p\n2020-01-02,1\n2020-01-02,2\n");
  CHECK_THROWS_AS(read_dated_csv(repeat), CsvError);
  std::istringstream bad_date("date,p\n2020-13-02,1\n");
  CHECK_THROWS_AS(read_dated_csv(bad_date), CsvError);
}

TEST_CASE("log returns") {
  std::istringstream in("date,p,q\n2020-01-01,100,10\n2020-01-02,110,5\n2020-01-03,99,5\n");
  const DatedSeries prices = read_dated_csv(in);
  const DatedSeries r = to_log_returns(prices);
  REQUIRE(r.values.size() == 2);
  CHECK(r.dates.front() == "2020-01-02");
  CHECK(r.values(0, 0) == doctest::Approx(std::log(1.1)));
  CHECK(r.values(1, 0) == doctest::Approx(std::log(0.9)));
  CHECK(r.values(0, 1) == doctest::Approx(std::log(0.5)));
  CHECK(r.values(1, 1) == 0.0);
  std::istringstream neg("date,p\n2020-01-01,1\n2020-01-02,-1\n");
  CHECK_THROWS_AS(to_log_returns(read_dated_csv(neg)), CsvError);
}

TEST_CASE("study specification from toml") {
  const auto spec = StudySpec::from_toml(R"(
models = ["M1", "V2"]
kinds = ["D", "PSN"]
families = "T2"
m = [50, 100]
T = 4.92
alternative = "var"
params = [0.0, 0.5]
replicates = 200
seed = 17
change_offset = 10
)");
  CHECK(spec.models == std::vector<std::string>{"M1", "V2"});
  CHECK(spec.kinds == std::vector<DetectorKind>{DetectorKind::D, DetectorKind::PSN});
  CHECK(spec.families == std::vector<ThresholdFamily>{ThresholdFamily::T2});
  CHECK(spec.m == std::vector<Index>{50, 100});
  CHECK(spec.T == std::vector<double>{4.92});
  CHECK(spec.alternative == Alternative::Variance);
  CHECK(spec.replicates == 200);
  CHECK(spec.seed == 17);
  CHECK(study_change_row(spec, 50) == 60);
  CHECK_FALSE(spec.calibrate_missing);

  StudySpec def;
  CHECK(study_change_row(def, 100) == 150);
  def.alternative = Alternative::Variance;
  CHECK(study_change_row(def, 100) == 151);

  CHECK_THROWS_AS(StudySpec::from_toml("kinds = [\"Z\"]"), ConfigError);
  CHECK_THROWS_AS(StudySpec::from_toml("m = ["), ConfigError);
  CHECK_THROWS_AS(StudySpec::from_toml("alternative = \"shape\""), ConfigError);
}

TEST_CASE("study output") {
  StudySpec spec;
  spec.models = {"M1"};
  spec.kinds = {DetectorKind::D, DetectorKind::Q};
  spec.m = {50};
  spec.params = {0.0, 0.5, 1.0};
  spec.replicates = 400;
  CalibrationTable table = small_table({1}, 1.0);
  const auto rows = run_study(spec, table);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.reject_rate >= 0.0);
    CHECK(r.reject_rate <= 1.0);
    CHECK(r.mc_se == doctest::Approx(std::sqrt(r.reject_rate * (1 - r.reject_rate) / 400.0)));
    CHECK(r.mean_runtime > 0.0);
  }
  // Rows are ordered param-major within the cell; power grows with the shift.
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = rows[i];
    const auto& b = rows[i + 2];
    const auto& c = rows[i + 4];
    CHECK(b.reject_rate + 2 * b.mc_se >= a.reject_rate);
    CHECK(c.reject_rate + 2 * c.mc_se >= b.reject_rate);
    CHECK(c.reject_rate > a.reject_rate);
  }

  std::ostringstream os;
  write_study_tsv(os, rows);
  std::istringstream lines(os.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "model\tkind\tfamily\tm\tT\tparam\treject_rate\tmc_se\tmean_tau\tmean_runtime");
  int count = 0;
  while (std::getline(lines, line)) {
    ++count;
    CHECK(std::count(line.begin(), line.end(), '\t') == 9);
  }
  CHECK(count == 6);

  // Same seed, same rates.
  const auto again = run_study(spec, table);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(again[i].rejections == rows[i].rejections);
}

TEST_CASE("missing calibration") {
  StudySpec spec;
  spec.replicates = 10;
  spec.T = {3.0};
  CalibrationTable table;
  CHECK_THROWS_AS(run_study(spec, table), MissingCalibrationError);
  spec.calibrate_missing = true;
  CHECK(run_study(spec, table).size() == 1);
  CHECK(table.size() == 1);
}

TEST_CASE("cells share streams across configurations") {
  MonitorConfig c;
  c.m = 30;
  c.c_alpha = 10.0;
  MonitorConfig c2 = c;
  const auto out = run_cell(ModelSpec::parse("M2"), {c, c2}, 50, 3);
  for (std::size_t r = 0; r < 50; ++r) {
    CHECK(out[0][r].rejected == out[1][r].rejected);
    CHECK(out[0][r].tau == out[1][r].tau);
  }
}

TEST_CASE("data workflow on a constant series finds nothing") {
  const DatedSeries d = dated(Eigen::MatrixXd::Constant(90, 1, 0.01));
  DataWorkflowConfig cfg;
  cfg.kind = DetectorKind::DSN;
  cfg.m = 30;
  CalibrationTable table;
  CHECK(run_data_workflow(d, cfg, table).empty());
}

TEST_CASE("data workflow with one variance break") {
  const Index m = 100, n = 300, brk = 150;  // rows 151.. have triple the scale
  int good = 0;
  CalibrationTable table;
  std::vector<Detection> first;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Eigen::MatrixXd x = random_series(n, 1, 3000 + seed).to_matrix();
    x.bottomRows(n - brk) *= 3.0;
    DataWorkflowConfig cfg;
    cfg.m = m;
    const auto det = run_data_workflow(dated(x), cfg, table);
    if (seed == 0) first = det;
    if (det.size() == 1 && std::abs(det[0].location_row - brk) <= 10) ++good;
    for (const auto& dd : det) {
      CHECK(dd.rejection_row > dd.location_row);
      CHECK(dd.location_date == iso_date(static_cast<int>(dd.location_row - 1)));
    }
  }
  CHECK(good >= 90);

  Eigen::MatrixXd x = random_series(n, 1, 3000).to_matrix();
  x.bottomRows(n - brk) *= 3.0;
  DataWorkflowConfig cfg;
  cfg.m = m;
  const auto again = run_data_workflow(dated(x), cfg, table);
  REQUIRE(again.size() == first.size());
  for (std::size_t i = 0; i < again.size(); ++i) CHECK(again[i].location_row == first[i].location_row);
  const auto j = nlohmann::json::parse(detections_to_json(again));
  CHECK(j.at("detections").size() == again.size());
}

TEST_CASE("data workflow end date and retrospective hook") {
  Eigen::MatrixXd x = random_series(200, 1, 77).to_matrix();
  const DatedSeries d = dated(x);
  DataWorkflowConfig cfg;
  cfg.m = 50;
  cfg.end_date = d.dates[40];
  CalibrationTable table;
  CHECK(run_data_workflow(d, cfg, table).empty());

  cfg.end_date.reset();
  int calls = 0;
  auto skip_first = [&](const Series&) -> std::optional<Index> {
    return ++calls == 1 ? std::optional<Index>(20) : std::nullopt;
  };
  run_data_workflow(d, cfg, table, skip_first);
  CHECK(calls >= 2);
}
