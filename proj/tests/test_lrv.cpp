#include "seqmon/errors.hpp"
#include "seqmon/lrv.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace seqmon;
using seqmon::test::random_series;
using seqmon::test::rel_diff;

TEST_CASE("quadratic spectral kernel") {
  CHECK(qs_kernel(0.0) == 1.0);
  CHECK(qs_kernel(1e-9) == doctest::Approx(1.0).epsilon(1e-15));
  // Series branch and closed form meet smoothly.
  CHECK(qs_kernel(2.6e-4) == doctest::Approx(qs_kernel(2.7e-4)).epsilon(1e-6));
  // Closed form at x = 1: a = 6 pi / 5.
  const double a = 6.0 * M_PI / 5.0;
  CHECK(qs_kernel(1.0) == doctest::Approx(3.0 / (a * a) * (std::sin(a) / a - std::cos(a))).epsilon(1e-14));
}

TEST_CASE("bandwidth rule") {
  CHECK(default_bandwidth(100) == doctest::Approx(2.0));
  CHECK(default_bandwidth(10) == doctest::Approx(1.0));
  CHECK(default_bandwidth(1000) == doctest::Approx(3.0));
  CHECK_THROWS_AS(default_bandwidth(1), ConfigError);
}

TEST_CASE("white noise has unit long-run variance") {
  const Series s = random_series(5000, 1, 99);
  const auto est = qs_lrv(s.to_matrix(), default_bandwidth(5000));
  CHECK(est.sigma(0, 0) >= 0.9);
  CHECK(est.sigma(0, 0) <= 1.1);
  CHECK(est.m == 5000);
}

TEST_CASE("constant proxy rows are rejected") {
  CHECK_THROWS_AS(qs_lrv(Eigen::MatrixXd::Constant(50, 2, 1.5), 2.0), NonInvertibleError);
}

TEST_CASE("structural properties of the estimate") {
  const Eigen::MatrixXd z = random_series(300, 3, 5).to_matrix();
  const auto est = qs_lrv(z, 2.5);
  SUBCASE("exact symmetry and a working inverse") {
    CHECK(est.sigma == est.sigma.transpose());
    CHECK((est.sigma_inv * est.sigma - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("scale equivariance") {
    const auto scaled = qs_lrv(-3.0 * z, 2.5);
    CHECK(rel_diff(scaled.sigma, 9.0 * est.sigma) <= 1e-12);
  }
  SUBCASE("vanishing bandwidth leaves the lag-0 covariance") {
    const Eigen::MatrixXd c = z.rowwise() - z.colwise().mean();
    const Eigen::MatrixXd lag0 = c.transpose() * c / 300.0;
    CHECK(rel_diff(qs_lrv(z, 1e-8).sigma, lag0) <= 1e-10);
  }
}

TEST_CASE("functional long-run variances") {
  SUBCASE("mean") {
    const Series s = random_series(5000, 1, 1234);
    const auto est = lrv_for_functional(FunctionalKind::mean(1), s, 5000);
    CHECK(est.sigma(0, 0) == doctest::Approx(1.0).epsilon(0.10));
  }
  SUBCASE("variance") {
    const Series s = random_series(5000, 1, 4321);
    const auto est = lrv_for_functional(FunctionalKind::vech_variance(1), s, 5000);
    CHECK(est.sigma(0, 0) == doctest::Approx(2.0).epsilon(0.15));
  }
  SUBCASE("median of uniforms") {
    // beta (1 - beta) / f(q)^2 = 0.25 for the U(0,1) median.
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unif;
    Eigen::MatrixXd x(5000, 1);
    for (Index t = 0; t < 5000; ++t) x(t, 0) = unif(rng);
    const auto est = lrv_for_functional(FunctionalKind::quantile(0.5), Series::from_matrix(x), 5000);
    CHECK(est.sigma(0, 0) == doctest::Approx(0.25).epsilon(0.15));
  }
  SUBCASE("correlation proxy has the delta-method variance") {
    // Independent Gaussian columns: the linearized Pearson coefficient has
    // asymptotic variance (1 - r^2)^2 = 1.
    const Series s = random_series(5000, 2, 2024);
    const auto est = lrv_for_functional(FunctionalKind::correlation(), s, 5000);
    CHECK(est.sigma(0, 0) == doctest::Approx(1.0).epsilon(0.15));
  }
  SUBCASE("only the training rows are used") {
    Series a = random_series(120, 2, 6);
    Series b = a.slice(0, 100);
    for (Index t = 0; t < 20; ++t) b.append(Eigen::Vector2d(100.0 + t, -50.0));
    for (auto kind : {FunctionalKind::mean(2), FunctionalKind::vech_variance(2), FunctionalKind::correlation()}) {
      CHECK(lrv_for_functional(kind, a, 100).sigma == lrv_for_functional(kind, b, 100).sigma);
    }
  }
}

TEST_CASE("kernel density at the centre of a normal sample") {
  const Series s = random_series(20000, 1, 31);
  const Eigen::VectorXd v = s.to_matrix().col(0);
  CHECK(kernel_density_at(v, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(0.05));
}
