#include "seqmon/errors.hpp"
#include "seqmon/monitor.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace seqmon;
using seqmon::test::random_series;

namespace {

LrvEstimate unit_lrv() {
  LrvEstimate e;
  e.sigma = Eigen::MatrixXd::Identity(1, 1);
  e.sigma_inv = Eigen::MatrixXd::Identity(1, 1);
  e.bandwidth = 1.0;
  e.rcond = 1.0;
  return e;
}

constexpr DetectorKind kAllKinds[] = {DetectorKind::D, DetectorKind::P, DetectorKind::Q, DetectorKind::DSN,
                                      DetectorKind::PSN};

// Rough 5% constants for T = 1; the tests below only need sensible magnitudes.
double rough_constant(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::D: return 13.7;
    case DetectorKind::P: return 6.5;
    case DetectorKind::Q: return 3.8;
    case DetectorKind::DSN: return 330.0;
    case DetectorKind::PSN: return 180.0;
  }
  return 0.0;
}

MonitorConfig config_for(DetectorKind kind, Index m) {
  MonitorConfig c;
  c.kind = kind;
  c.m = m;
  c.T = 1.0;
  c.c_alpha = rough_constant(kind);
  return c;
}

// Training rows followed by monitoring rows, the latter shifted by `shift`
// from monitoring step k_star (row m + k_star) on.
Series shifted_stream(Index m, Index k_star, double shift, std::uint64_t seed) {
  Eigen::MatrixXd x = random_series(2 * m, 1, seed).to_matrix();
  x.bottomRows(2 * m - (m + k_star - 1)).array() += shift;
  return Series::from_matrix(x);
}

}  // namespace

TEST_CASE("a constant stream runs to the horizon") {
  const Index m = 40;
  const Series s = Series::from_matrix(Eigen::MatrixXd::Constant(2 * m, 1, 1.25));
  for (auto kind : kAllKinds) {
    MonitorConfig c = config_for(kind, m);
    if (!is_self_normalized(kind)) c.lrv = unit_lrv();
    Monitor mon(c, s.slice(0, m));
    StepResult r;
    for (Index t = m; t < 2 * m; ++t) {
      r = mon.step(s.row(t));
      if (r.outcome != StepOutcome::Continue) break;
    }
    CHECK(r.outcome == StepOutcome::HorizonReached);
    CHECK(r.k == m);
    CHECK(mon.finished());
    CHECK_FALSE(mon.report().rejected);
    CHECK_THROWS_AS(mon.step(s.row(0)), ConfigError);
  }
}

TEST_CASE("a large shift is detected after it occurs") {
  const Index m = 100, k_star = 50;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    // Steps 1..k_star are unshifted.
    const auto rep = run(config_for(DetectorKind::D, m), shifted_stream(m, k_star + 1, 10.0, 500 + seed));
    if (rep.rejected && *rep.tau > k_star && *rep.tau <= m) ++hits;
  }
  CHECK(hits >= 99);
}

TEST_CASE("every kind rejects after a large shift") {
  const Index m = 100;
  for (auto kind : kAllKinds) {
    int rejected = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      rejected += run(config_for(kind, m), shifted_stream(m, 51, 10.0, 500 + seed)).rejected ? 1 : 0;
    }
    INFO(to_string(kind));
    CHECK(rejected >= 99);
  }
}

TEST_CASE("the change location is recovered") {
  const Index m = 100, k_star = 50;
  int close = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    // First shifted row is m + k_star.
    const auto rep = run(config_for(DetectorKind::D, m), shifted_stream(m, k_star, 10.0, 900 + seed));
    if (rep.rejected && std::abs(*rep.location - (m + k_star)) <= 5) ++close;
  }
  CHECK(close >= 90);
}

TEST_CASE("rejection requires strict exceedance") {
  const Series s = Series::from_matrix((Eigen::MatrixXd(4, 1) << 0, 0, 2, 0).finished());
  MonitorConfig c;
  c.kind = DetectorKind::Q;
  c.m = 2;
  c.T = 1.0;
  c.lrv = unit_lrv();
  c.c_alpha = 1e-6;
  Monitor probe(c, s.slice(0, 2));
  const StepResult first = probe.step(s.row(2));
  REQUIRE(first.outcome == StepOutcome::Reject);
  // A rejection at k = 1 puts the location at the last training row.
  CHECK(probe.report().location == 2);

  c.c_alpha = first.value;
  Monitor tie(c, s.slice(0, 2));
  const StepResult r = tie.step(s.row(2));
  CHECK(r.threshold == r.value);
  CHECK(r.outcome == StepOutcome::Continue);

  c.c_alpha = std::nextafter(first.value, 0.0);
  Monitor below(c, s.slice(0, 2));
  CHECK(below.step(s.row(2)).outcome == StepOutcome::Reject);
}

TEST_CASE("runs are deterministic and streaming matches batch") {
  const Index m = 60;
  const Series s = shifted_stream(m, 30, 1.5, 42);
  for (auto kind : kAllKinds) {
    const MonitorConfig c = config_for(kind, m);
    const auto a = run(c, s);
    const auto b = run(c, s);
    CHECK(a == b);

    Monitor mon(c, s.slice(0, m));
    for (Index t = m; t < 2 * m && !mon.finished(); ++t) mon.step(s.row(t));
    CHECK(mon.report() == a);
  }
}

TEST_CASE("threshold trace") {
  const Index m = 50;
  const Series s = random_series(2 * m, 1, 8);
  for (auto family : kAllFamilies) {
    MonitorConfig c = config_for(DetectorKind::D, m);
    c.family = family;
    c.c_alpha = 1e9;
    const auto rep = run(c, s);
    REQUIRE(rep.trajectory.size() == static_cast<std::size_t>(m));
    for (std::size_t i = 1; i < rep.trajectory.size(); ++i) {
      CHECK(rep.trajectory[i].threshold >= rep.trajectory[i - 1].threshold);
      CHECK(rep.trajectory[i].threshold == c.threshold(rep.trajectory[i].k));
    }
  }
}

TEST_CASE("a lower constant never delays rejection") {
  const Index m = 80;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Series s = shifted_stream(m, 20, 1.0, 70 + seed);
    for (auto kind : kAllKinds) {
      MonitorConfig hi = config_for(kind, m);
      MonitorConfig lo = hi;
      lo.c_alpha = 0.5 * hi.c_alpha;
      const auto a = run(hi, s);
      const auto b = run(lo, s);
      if (a.rejected) {
        REQUIRE(b.rejected);
        CHECK(*b.tau <= *a.tau);
      }
    }
  }
}

TEST_CASE("configuration errors") {
  const Series s = random_series(100, 1, 1);
  MonitorConfig c = config_for(DetectorKind::D, 30);
  c.T = 1.01;
  CHECK_THROWS_AS(c.horizon(), ConfigError);
  CHECK_THROWS_AS(run(c, s), ConfigError);
  c.T = 1.0;
  CHECK_THROWS_AS(Monitor(c, s.slice(0, 29)), ConfigError);
  c.kind = DetectorKind::DSN;
  c.lrv = unit_lrv();
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c.kind = DetectorKind::D;
  c.lrv.reset();
  CalibrationTable empty;
  CHECK_THROWS_AS(c.use_table(empty), MissingCalibrationError);
}

TEST_CASE("json report") {
  const Index m = 40;
  const auto rep = run(config_for(DetectorKind::P, m), shifted_stream(m, 10, 8.0, 3));
  REQUIRE(rep.rejected);
  const auto j = nlohmann::json::parse(report_to_json(rep));
  CHECK(j.at("rejected").get<bool>());
  CHECK(j.at("tau").get<Index>() == *rep.tau);
  CHECK(j.at("location").get<Index>() == *rep.location);
  CHECK(j.at("trajectory").size() == rep.trajectory.size());
}
