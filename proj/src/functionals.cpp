#include "seqmon/functionals.hpp"

#include "seqmon/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

namespace seqmon {

namespace {

// beta * n is compared with a small slack so that e.g. beta = 0.7, n = 10 gives
// rank 7 even though 0.7 * 10 evaluates to 7.000000000000001.
Index quantile_rank(double beta, Index n) {
  const auto r = static_cast<Index>(std::ceil(beta * static_cast<double>(n) - 1e-9));
  return std::clamp<Index>(r, 1, n);
}

// Variance below this fraction of the raw second moment is treated as zero.
constexpr double kDegenerateVariance = 1e-12;

// Double-double arithmetic for the prefix sums. Window moments are differences
// of two long running sums; keeping the rounding error of each sum lets the
// difference come out as accurate as a fresh two-pass computation.
struct DD {
  double hi = 0.0;
  double lo = 0.0;
};

DD quick_two_sum(double a, double b) {
  const double s = a + b;
  return {s, b - (s - a)};
}

DD two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

DD dd_add(DD a, DD b) {
  const DD s = two_sum(a.hi, b.hi);
  return quick_two_sum(s.hi, s.lo + a.lo + b.lo);
}

DD dd_sub(DD a, DD b) { return dd_add(a, {-b.hi, -b.lo}); }

DD dd_mul(DD a, DD b) {
  const double p = a.hi * b.hi;
  const double e = std::fma(a.hi, b.hi, -p) + (a.hi * b.lo + a.lo * b.hi);
  return quick_two_sum(p, e);
}

DD dd_div(DD a, double b) {
  const double q1 = a.hi / b;
  const double p = q1 * b;
  const double r = ((a.hi - p) - std::fma(q1, b, -p)) + a.lo;
  return quick_two_sum(q1, r / b);
}

DD two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

bool correlation_from_moments(double vx, double vy, double cxy, double mx2, double my2,
                              double& out) {
  if (!(vx > kDegenerateVariance * mx2) || !(vy > kDegenerateVariance * my2)) return false;
  out = std::clamp(cxy / std::sqrt(vx * vy), -1.0, 1.0);
  return true;
}

void check_window(const Series& series, Window w) {
  if (w.first < 1 || w.first > w.last || w.last > series.size()) {
    throw ConfigError("invalid window [" + std::to_string(w.first) + ", " + std::to_string(w.last) +
                      "] for series of " + std::to_string(series.size()) + " rows");
  }
}

void check_dims(const FunctionalKind& kind, const Series& series) {
  if (series.dim() != kind.input_dim()) {
    throw ConfigError(kind.name() + " expects " + std::to_string(kind.input_dim()) +
                      "-dimensional rows, series has " + std::to_string(series.dim()));
  }
}

}  // namespace

FunctionalKind FunctionalKind::mean(Index d) {
  if (d < 1) throw ConfigError("mean functional needs d >= 1");
  return {FunctionalType::Mean, d, d, 0.0};
}

FunctionalKind FunctionalKind::vech_variance(Index d) {
  if (d < 1) throw ConfigError("variance functional needs d >= 1");
  return {FunctionalType::VechVariance, d, vech_size(d), 0.0};
}

FunctionalKind FunctionalKind::quantile(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("quantile level must lie in (0, 1)");
  return {FunctionalType::Quantile, 1, 1, beta};
}

FunctionalKind FunctionalKind::correlation() { return {FunctionalType::Correlation, 2, 1, 0.0}; }

FunctionalKind FunctionalKind::parse(std::string_view text, Index d) {
  if (text == "mean") return mean(d);
  if (text == "var" || text == "variance") return vech_variance(d);
  if (text == "corr" || text == "correlation") {
    if (d != 2) throw ConfigError("correlation functional requires exactly 2 columns");
    return correlation();
  }
  if (text.starts_with("quantile:")) {
    if (d != 1) throw ConfigError("quantile functional requires univariate data");
    auto num = text.substr(9);
    double beta = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), beta);
    if (ec != std::errc{} || ptr != num.data() + num.size()) {
      throw ConfigError("cannot parse quantile level '" + std::string(num) + "'");
    }
    return quantile(beta);
  }
  throw ConfigError("unknown functional '" + std::string(text) + "'");
}

std::string FunctionalKind::name() const {
  switch (type_) {
    case FunctionalType::Mean: return "mean";
    case FunctionalType::VechVariance: return "var";
    case FunctionalType::Quantile: {
      std::string s = "quantile:";
      char buf[32];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, beta_);
      (void)ec;
      return s.append(buf, ptr);
    }
    case FunctionalType::Correlation: return "corr";
  }
  return "?";
}

Index vech_size(Index d) { return d * (d + 1) / 2; }

Eigen::VectorXd vech(const Eigen::MatrixXd& a) {
  const Index d = a.rows();
  Eigen::VectorXd out(vech_size(d));
  Index k = 0;
  for (Index col = 0; col < d; ++col)
    for (Index row = 0; row <= col; ++row) out[k++] = a(row, col);
  return out;
}

// ---------------------------------------------------------------------------
// PrefixCache

PrefixCache::PrefixCache(Index dim, bool second_moments)
    : dim_(dim), q_(second_moments ? vech_size(dim) : 0), second_(second_moments) {
  sx_.assign(static_cast<std::size_t>(dim_), 0.0);
  sx_lo_.assign(static_cast<std::size_t>(dim_), 0.0);
  sxx_.assign(static_cast<std::size_t>(q_), 0.0);
  sxx_lo_.assign(static_cast<std::size_t>(q_), 0.0);
}

void PrefixCache::extend(const Series& series) {
  if (series.dim() != dim_) throw ConfigError("prefix cache dimension mismatch");
  if (series.size() < rows_) throw ConfigError("prefix cache cannot shrink");
  if (rows_ == 0 && series.size() > 0) shift_ = series.row(0);
  const Index n = series.size();
  sx_.resize(static_cast<std::size_t>((n + 1) * dim_));
  sx_lo_.resize(sx_.size());
  sxx_.resize(static_cast<std::size_t>((n + 1) * q_));
  sxx_lo_.resize(sxx_.size());
  for (Index t = rows_ + 1; t <= n; ++t) {
    const Index p1 = (t - 1) * dim_, c1 = t * dim_;
    for (Index c = 0; c < dim_; ++c) {
      const DD v = dd_add({sx_[p1 + c], sx_lo_[p1 + c]}, {series(t - 1, c) - shift_[c], 0.0});
      sx_[c1 + c] = v.hi;
      sx_lo_[c1 + c] = v.lo;
    }
    if (second_) {
      const Index p2 = (t - 1) * q_, c2 = t * q_;
      Index k = 0;
      for (Index col = 0; col < dim_; ++col) {
        const double xc = series(t - 1, col) - shift_[col];
        for (Index row = 0; row <= col; ++row, ++k) {
          const DD v = dd_add({sxx_[p2 + k], sxx_lo_[p2 + k]}, two_prod(series(t - 1, row) - shift_[row], xc));
          sxx_[c2 + k] = v.hi;
          sxx_lo_[c2 + k] = v.lo;
        }
      }
    }
  }
  rows_ = n;
}

PrefixCache build_prefix_cache(const Series& series, const FunctionalKind& kind) {
  if (!kind.supports_prefix_cache()) {
    throw ConfigError("quantile functional has no prefix-sum representation");
  }
  check_dims(kind, series);
  PrefixCache cache(series.dim(), kind.type() != FunctionalType::Mean);
  cache.extend(series);
  return cache;
}

// ---------------------------------------------------------------------------
// Estimation

namespace {

// Cached evaluation; returns false for a degenerate correlation window.
bool estimate_cached(const FunctionalKind& kind, const PrefixCache& cache, Index first, Index last,
                     Eigen::Ref<Eigen::VectorXd> out) {
  const double n = static_cast<double>(last - first + 1);
  const Index d = cache.dim();
  auto window_sum = [&](Index c) {
    return dd_sub({cache.sum(last)[c], cache.sum_lo(last)[c]}, {cache.sum(first - 1)[c], cache.sum_lo(first - 1)[c]});
  };
  auto window_sq = [&](Index k) {
    return dd_sub({cache.sum_sq(last)[k], cache.sum_sq_lo(last)[k]},
                  {cache.sum_sq(first - 1)[k], cache.sum_sq_lo(first - 1)[k]});
  };
  // n^-1 sum (x_r - xbar_r)(x_c - xbar_c) = (S_rc - S_r S_c / n) / n
  auto central = [&](DD sr, DD sc, DD src) { return dd_div(dd_sub(src, dd_div(dd_mul(sr, sc), n)), n).hi; };
  switch (kind.type()) {
    case FunctionalType::Mean:
      for (Index c = 0; c < d; ++c) out[c] = cache.shift()[c] + dd_div(window_sum(c), n).hi;
      return true;
    case FunctionalType::VechVariance: {
      Index k = 0;
      for (Index col = 0; col < d; ++col) {
        const DD sc = window_sum(col);
        for (Index row = 0; row <= col; ++row, ++k) out[k] = central(window_sum(row), sc, window_sq(k));
      }
      return true;
    }
    case FunctionalType::Correlation: {
      const DD sx = window_sum(0), sy = window_sum(1);
      const DD sxx = window_sq(0), sxy = window_sq(1), syy = window_sq(2);
      double r = 0.0;
      if (!correlation_from_moments(central(sx, sx, sxx), central(sy, sy, syy), central(sx, sy, sxy), sxx.hi / n,
                                    syy.hi / n, r)) {
        return false;
      }
      out[0] = r;
      return true;
    }
    case FunctionalType::Quantile: break;
  }
  throw ConfigError("functional has no cached evaluation");
}

// Two-pass evaluation straight from the rows.
bool estimate_direct(const FunctionalKind& kind, const Series& series, Index first, Index last,
                     Eigen::Ref<Eigen::VectorXd> out, std::vector<double>& scratch) {
  const Index n = last - first + 1;
  const Index d = series.dim();
  switch (kind.type()) {
    case FunctionalType::Mean: {
      out.setZero();
      for (Index t = first - 1; t < last; ++t) out += series.row(t);
      out /= static_cast<double>(n);
      return true;
    }
    case FunctionalType::VechVariance: {
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
      for (Index t = first - 1; t < last; ++t) mu += series.row(t);
      mu /= static_cast<double>(n);
      out.setZero();
      for (Index t = first - 1; t < last; ++t) {
        Index k = 0;
        for (Index col = 0; col < d; ++col) {
          const double xc = series(t, col) - mu[col];
          for (Index row = 0; row <= col; ++row, ++k) out[k] += (series(t, row) - mu[row]) * xc;
        }
      }
      out /= static_cast<double>(n);
      return true;
    }
    case FunctionalType::Quantile: {
      scratch.assign(series.raw().begin() + (first - 1), series.raw().begin() + last);
      const Index r = quantile_rank(kind.beta(), n);
      std::nth_element(scratch.begin(), scratch.begin() + (r - 1), scratch.end());
      out[0] = scratch[static_cast<std::size_t>(r - 1)];
      return true;
    }
    case FunctionalType::Correlation: {
      double mx = 0.0, my = 0.0;
      for (Index t = first - 1; t < last; ++t) {
        mx += series(t, 0);
        my += series(t, 1);
      }
      mx /= static_cast<double>(n);
      my /= static_cast<double>(n);
      double vx = 0.0, vy = 0.0, cxy = 0.0;
      for (Index t = first - 1; t < last; ++t) {
        const double dx = series(t, 0) - mx;
        const double dy = series(t, 1) - my;
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
      }
      if (!(vx > 0.0) || !(vy > 0.0)) return false;
      out[0] = std::clamp(cxy / std::sqrt(vx * vy), -1.0, 1.0);
      return true;
    }
  }
  return false;
}

}  // namespace

Eigen::VectorXd estimate(const FunctionalKind& kind, const Series& series, Window w,
                         const PrefixCache* cache) {
  check_dims(kind, series);
  check_window(series, w);
  Eigen::VectorXd out(kind.output_dim());
  bool ok = false;
  if (cache != nullptr) {
    if (!kind.supports_prefix_cache()) throw ConfigError("quantile functional cannot use a cache");
    if (cache->rows() < w.last) throw ConfigError("prefix cache does not cover the window");
    ok = estimate_cached(kind, *cache, w.first, w.last, out);
  } else {
    std::vector<double> scratch;
    ok = estimate_direct(kind, series, w.first, w.last, out, scratch);
  }
  if (!ok) {
    throw DegenerateWindowError("zero within-window variance in window [" +
                                std::to_string(w.first) + ", " + std::to_string(w.last) + "]");
  }
  return out;
}

Eigen::VectorXd influence(const FunctionalKind& kind, const Eigen::VectorXd& x,
                          const InfluenceReference& ref) {
  if (x.size() != kind.input_dim()) throw ConfigError("influence: dimension mismatch");
  switch (kind.type()) {
    case FunctionalType::Mean: {
      const auto* r = std::get_if<MeanReference>(&ref);
      if (r == nullptr) throw ConfigError("mean influence needs a MeanReference");
      return x - r->mean;
    }
    case FunctionalType::VechVariance: {
      const auto* r = std::get_if<VarianceReference>(&ref);
      if (r == nullptr) throw ConfigError("variance influence needs a VarianceReference");
      const Eigen::VectorXd c = x - r->mean;
      return vech(c * c.transpose() - r->variance);
    }
    case FunctionalType::Quantile: {
      const auto* r = std::get_if<QuantileReference>(&ref);
      if (r == nullptr) throw ConfigError("quantile influence needs a QuantileReference");
      if (!(r->density > 0.0)) throw ConfigError("quantile influence needs f(q) > 0");
      const double indicator = x[0] <= r->quantile ? 1.0 : 0.0;
      return Eigen::VectorXd::Constant(1, (kind.beta() - indicator) / r->density);
    }
    case FunctionalType::Correlation: break;
  }
  throw ConfigError("no influence function is provided for the correlation functional");
}

// ---------------------------------------------------------------------------
// WindowEstimator

WindowEstimator::WindowEstimator(FunctionalKind kind) : kind_(kind) {
  if (kind_.supports_prefix_cache()) {
    cache_.emplace(kind_.input_dim(), kind_.type() != FunctionalType::Mean);
  }
}

void WindowEstimator::sync(const Series& series) {
  check_dims(kind_, series);
  if (cache_) cache_->extend(series);
}

bool WindowEstimator::estimate(const Series& series, Index first, Index last,
                               Eigen::Ref<Eigen::VectorXd> out) {
  if (first > last) {
    out.setZero();
    return true;
  }
  if (cache_) {
    if (cache_->rows() < last) sync(series);
    return estimate_cached(kind_, *cache_, first, last, out);
  }
  return estimate_direct(kind_, series, first, last, out, scratch_);
}

const Eigen::VectorXd* WindowEstimator::head(const Series& series, Index z) {
  const auto idx = static_cast<std::size_t>(z);
  if (heads_.size() <= idx) {
    heads_.resize(idx + 1);
    head_state_.resize(idx + 1, 0);
  }
  if (head_state_[idx] == 0) {
    heads_[idx].resize(output_dim());
    head_state_[idx] = estimate(series, 1, z, heads_[idx]) ? 1 : 2;
  }
  return head_state_[idx] == 1 ? &heads_[idx] : nullptr;
}

}  // namespace seqmon
