#include "seqmon/errors.hpp"
#include "seqmon/functionals.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace seqmon;
using seqmon::test::random_series;
using seqmon::test::rel_diff;

TEST_CASE("mean of two rows") {
  const Series s = Series::from_matrix((Eigen::MatrixXd(2, 2) << 1, 2, 3, 4).finished());
  const auto v = estimate(FunctionalKind::mean(2), s, {1, 2});
  CHECK(v[0] == 2.0);
  CHECK(v[1] == 3.0);
}

TEST_CASE("variance of a constant window is zero") {
  const Series s = Series::from_matrix(Eigen::MatrixXd::Constant(7, 2, 3.25));
  const auto v = estimate(FunctionalKind::vech_variance(2), s, {1, 7});
  REQUIRE(v.size() == 3);
  CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("median of 1..4 is the left generalized inverse") {
  const Series s = Series::from_matrix((Eigen::MatrixXd(4, 1) << 3, 1, 4, 2).finished());
  CHECK(estimate(FunctionalKind::quantile(0.5), s, {1, 4})[0] == 2.0);
  CHECK(estimate(FunctionalKind::quantile(0.75), s, {1, 4})[0] == 3.0);
  CHECK(estimate(FunctionalKind::quantile(0.76), s, {1, 4})[0] == 4.0);
}

TEST_CASE("vech variance against a double loop") {
  for (Index d : {2, 3}) {
    const Series s = random_series(50, d, 11 + static_cast<std::uint64_t>(d));
    const Eigen::MatrixXd x = s.to_matrix();
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd sxx = Eigen::MatrixXd::Zero(d, d);
    for (Index t = 0; t < 50; ++t) {
      for (Index a = 0; a < d; ++a) {
        mu[a] += x(t, a) / 50.0;
        for (Index b = 0; b < d; ++b) sxx(a, b) += x(t, a) * x(t, b) / 50.0;
      }
    }
    const Eigen::MatrixXd v = sxx - mu * mu.transpose();
    Eigen::VectorXd expected(vech_size(d));
    Index k = 0;
    for (Index col = 0; col < d; ++col)
      for (Index row = 0; row <= col; ++row) expected[k++] = v(row, col);
    const auto got = estimate(FunctionalKind::vech_variance(d), s, {1, 50});
    for (Index i = 0; i < expected.size(); ++i) CHECK(std::abs(got[i] - expected[i]) <= 1e-12);
    const auto cache = build_prefix_cache(s, FunctionalKind::vech_variance(d));
    const auto cached = estimate(FunctionalKind::vech_variance(d), s, {1, 50}, &cache);
    for (Index i = 0; i < expected.size(); ++i) CHECK(std::abs(cached[i] - expected[i]) <= 1e-12);
  }
}

TEST_CASE("vech stacks the upper triangle column by column") {
  Eigen::Matrix3d a;
  a << 1, 2, 4, 2, 3, 5, 4, 5, 6;
  const auto v = vech(a);
  REQUIRE(v.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(v[i] == i + 1.0);
}

TEST_CASE("configuration and degenerate-window errors") {
  CHECK_THROWS_AS(FunctionalKind::parse("quantile:0.5", 2), ConfigError);
  CHECK_THROWS_AS(FunctionalKind::quantile(1.0), ConfigError);
  CHECK_THROWS_AS(FunctionalKind::parse("corr", 3), ConfigError);
  const Series two = random_series(10, 2, 3);
  CHECK_THROWS_AS(estimate(FunctionalKind::quantile(0.5), two, {1, 10}), ConfigError);
  CHECK_THROWS_AS(estimate(FunctionalKind::mean(2), two, {0, 3}), ConfigError);
  CHECK_THROWS_AS(estimate(FunctionalKind::mean(2), two, {4, 3}), ConfigError);

  Eigen::MatrixXd m(5, 2);
  m << 1, 0.3, 1, -1, 1, 2, 1, 0.1, 1, 5;
  const Series flat = Series::from_matrix(m);
  CHECK_THROWS_AS(estimate(FunctionalKind::correlation(), flat, {1, 5}), DegenerateWindowError);
  const auto cache = build_prefix_cache(flat, FunctionalKind::correlation());
  CHECK_THROWS_AS(estimate(FunctionalKind::correlation(), flat, {1, 5}, &cache), DegenerateWindowError);
}

TEST_CASE("influence functions") {
  const Eigen::VectorXd mu = (Eigen::VectorXd(2) << 1.5, -2).finished();
  CHECK(influence(FunctionalKind::mean(2), mu, MeanReference{mu}).cwiseAbs().maxCoeff() == 0.0);

  VarianceReference vr{Eigen::VectorXd::Constant(1, 0.7), Eigen::MatrixXd::Constant(1, 1, 2.5)};
  CHECK(influence(FunctionalKind::vech_variance(1), vr.mean, vr)[0] == doctest::Approx(-2.5));

  const auto q = FunctionalKind::quantile(0.5);
  CHECK(influence(q, Eigen::VectorXd::Constant(1, 3.0), QuantileReference{1.0, 0.25})[0] == doctest::Approx(2.0));
  CHECK(influence(q, Eigen::VectorXd::Constant(1, 0.0), QuantileReference{1.0, 0.25})[0] == doctest::Approx(-2.0));
  CHECK_THROWS_AS(influence(q, Eigen::VectorXd::Constant(1, 0.0), QuantileReference{1.0, 0.0}), ConfigError);
  CHECK_THROWS(influence(FunctionalKind::correlation(), Eigen::VectorXd::Zero(2), MeanReference{}));
}

TEST_CASE("prefix cache") {
  SUBCASE("single row") {
    const Series s = Series::from_matrix((Eigen::MatrixXd(1, 2) << 4, -1).finished());
    const auto cache = build_prefix_cache(s, FunctionalKind::mean(2));
    // Sums are stored relative to the first row.
    CHECK((cache.shift() + cache.sum(1)).isApprox(s.row(0).transpose()));
    CHECK(cache.sum(0).isZero(0.0));
  }
  SUBCASE("cached and uncached windows agree") {
    const Series s = random_series(100, 2, 17);
    std::mt19937_64 rng(5);
    for (auto kind : {FunctionalKind::mean(2), FunctionalKind::vech_variance(2), FunctionalKind::correlation()}) {
      const auto cache = build_prefix_cache(s, kind);
      for (int w = 0; w < 50; ++w) {
        Index a = 1 + static_cast<Index>(rng() % 100), b = 1 + static_cast<Index>(rng() % 100);
        if (a > b) std::swap(a, b);
        if (b - a < 2) b = std::min<Index>(100, a + 2);
        const auto x = estimate(kind, s, {a, b});
        const auto y = estimate(kind, s, {a, b}, &cache);
        CHECK(rel_diff(x, y) <= 1e-12);
      }
    }
  }
  SUBCASE("incremental extension equals a rebuild") {
    Series s = random_series(30, 3, 8);
    PrefixCache inc(3, true);
    inc.extend(s);
    s.append(Eigen::Vector3d(0.5, -0.25, 2.0));
    inc.extend(s);
    const auto full = build_prefix_cache(s, FunctionalKind::vech_variance(3));
    for (Index t = 0; t <= 31; ++t) {
      CHECK(inc.sum(t) == full.sum(t));
      CHECK(inc.sum_sq(t) == full.sum_sq(t));
    }
  }
  CHECK_THROWS_AS(build_prefix_cache(random_series(5, 1, 1), FunctionalKind::quantile(0.5)), ConfigError);
}

TEST_CASE("functional invariants") {
  const Series s = random_series(40, 2, 23);
  const Eigen::MatrixXd x = s.to_matrix();

  SUBCASE("permutation invariance") {
    std::vector<Index> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(2));
    Eigen::MatrixXd px(40, 2);
    for (Index i = 0; i < 40; ++i) px.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    const Series ps = Series::from_matrix(px);
    for (auto kind : {FunctionalKind::mean(2), FunctionalKind::vech_variance(2), FunctionalKind::correlation()}) {
      CHECK(rel_diff(estimate(kind, s, {1, 40}), estimate(kind, ps, {1, 40})) <= 1e-12);
    }
    const Series s1 = Series::from_matrix(x.col(0));
    const Series p1 = Series::from_matrix(px.col(0));
    CHECK(estimate(FunctionalKind::quantile(0.3), s1, {1, 40})[0] ==
          estimate(FunctionalKind::quantile(0.3), p1, {1, 40})[0]);
  }
  SUBCASE("mean is affine equivariant; variance shift invariant and scale covariant") {
    const double a = -2.5, b = 7.0;
    const Series t = Series::from_matrix((a * x.array() + b).matrix());
    const auto m0 = estimate(FunctionalKind::mean(2), s, {3, 30});
    const auto m1 = estimate(FunctionalKind::mean(2), t, {3, 30});
    CHECK(rel_diff(m1, (a * m0.array() + b).matrix()) <= 1e-12);
    const auto v0 = estimate(FunctionalKind::vech_variance(2), s, {3, 30});
    const auto v1 = estimate(FunctionalKind::vech_variance(2), t, {3, 30});
    CHECK(rel_diff(v1, a * a * v0) <= 1e-12);

    Eigen::MatrixXd y = x;
    y.col(0) *= 3.0;
    y.col(1) *= -0.5;
    const auto v2 = estimate(FunctionalKind::vech_variance(2), Series::from_matrix(y), {3, 30});
    CHECK(v2[0] == doctest::Approx(9.0 * v0[0]).epsilon(1e-12));
    CHECK(v2[1] == doctest::Approx(-1.5 * v0[1]).epsilon(1e-12));
    CHECK(v2[2] == doctest::Approx(0.25 * v0[2]).epsilon(1e-12));
  }
  SUBCASE("quantile returns a data value") {
    const Series s1 = Series::from_matrix(x.col(1));
    for (double beta : {0.01, 0.2, 0.5, 0.9, 0.99}) {
      const double q = estimate(FunctionalKind::quantile(beta), s1, {5, 33})[0];
      bool found = false;
      for (Index t = 4; t < 33; ++t) found = found || s1(t, 0) == q;
      CHECK(found);
    }
  }
  SUBCASE("correlation bounds") {
    const double r = estimate(FunctionalKind::correlation(), s, {1, 40})[0];
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    Eigen::MatrixXd same(40, 2);
    same.col(0) = x.col(0);
    same.col(1) = x.col(0);
    CHECK(estimate(FunctionalKind::correlation(), Series::from_matrix(same), {1, 40})[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("window estimator follows the empty-window convention") {
  Series s = random_series(10, 1, 4);
  WindowEstimator est(FunctionalKind::mean(1));
  est.sync(s);
  Eigen::VectorXd out(1);
  CHECK(est.estimate(s, 6, 5, out));
  CHECK(out[0] == 0.0);
  REQUIRE(est.head(s, 4) != nullptr);
  CHECK(rel_diff(*est.head(s, 4), estimate(FunctionalKind::mean(1), s, {1, 4})) <= 1e-14);
}
