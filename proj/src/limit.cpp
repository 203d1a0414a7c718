#include "seqmon/limit.hpp"

#include "seqmon/errors.hpp"
#include "seqmon/linalg.hpp"
#include "seqmon/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace seqmon {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sq(double x) { return x * x; }

// v^T A^{-1} v for a small symmetric p x p matrix (row-major, overwritten by
// its Cholesky factor). NaN when a pivot falls below the singularity cutoff.
double chol_quadratic(double* a, double* v, Index p) {
  double max_diag = 0.0;
  for (Index i = 0; i < p; ++i) max_diag = std::max(max_diag, a[i * p + i]);
  if (!(max_diag > 0.0)) return kNaN;
  const double floor = kSingularRcond * max_diag;
  for (Index j = 0; j < p; ++j) {
    double d = a[j * p + j];
    for (Index k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
    if (!(d > floor)) return kNaN;
    const double l = std::sqrt(d);
    a[j * p + j] = l;
    for (Index i = j + 1; i < p; ++i) {
      double s = a[i * p + j];
      for (Index k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = s / l;
    }
  }
  double q = 0.0;
  for (Index i = 0; i < p; ++i) {
    double s = v[i];
    for (Index k = 0; k < i; ++k) s -= a[i * p + k] * v[k];
    v[i] = s / a[i * p + i];
    q += v[i] * v[i];
  }
  return q;
}

// Upper/lower convex hulls of the points (i, W(i)) added left to right, used to
// get max and min over s of t W(s) - s W(t) in logarithmic time per t (p = 1).
struct Hull {
  std::vector<Index> idx;
  bool upper = true;

  static double cross(Index o, Index a, Index b, const double* w) {
    return static_cast<double>(a - o) * (w[b] - w[o]) - (w[a] - w[o]) * static_cast<double>(b - o);
  }

  void add(Index i, const double* w) {
    while (idx.size() >= 2) {
      const double c = cross(idx[idx.size() - 2], idx.back(), i, w);
      if (upper ? c >= 0.0 : c <= 0.0) {
        idx.pop_back();
      } else {
        break;
      }
    }
    idx.push_back(i);
  }

  // Vertex extremizing ti * W(s) - s * W(t) (max on the upper hull, min on the lower).
  Index query(double ti, double wt, const double* w) const {
    auto g = [&](std::size_t h) { return ti * w[idx[h]] - static_cast<double>(idx[h]) * wt; };
    std::size_t lo = 0, hi = idx.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      const bool step_better = upper ? g(mid + 1) > g(mid) : g(mid + 1) < g(mid);
      if (step_better) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return idx[lo];
  }
};

std::vector<double> profile_d(const BrownianPath& path) {
  const Index n = path.steps_per_unit(), last = path.last_index(), p = path.dim();
  std::vector<double> out(static_cast<std::size_t>(last - n + 1), 0.0);
  if (p == 1) {
    const double* w = path.component(0);
    Hull up{{}, true}, low{{}, false};
    for (Index ti = n; ti <= last; ++ti) {
      up.add(ti, w);
      low.add(ti, w);
      const double t = path.time(ti);
      const Index smax = up.query(static_cast<double>(ti), w[ti], w);
      const Index smin = low.query(static_cast<double>(ti), w[ti], w);
      const double fmax = t * w[smax] - path.time(smax) * w[ti];
      const double fmin = t * w[smin] - path.time(smin) * w[ti];
      out[static_cast<std::size_t>(ti - n)] = std::max(sq(fmax), sq(fmin));
    }
    return out;
  }
  std::vector<double> acc(static_cast<std::size_t>(last + 1));
  for (Index ti = n; ti <= last; ++ti) {
    const double t = path.time(ti);
    std::fill(acc.begin(), acc.begin() + (ti - n + 1), 0.0);
    for (Index c = 0; c < p; ++c) {
      const double* w = path.component(c);
      const double wt = w[ti];
      for (Index si = n; si <= ti; ++si) acc[static_cast<std::size_t>(si - n)] += sq(t * w[si] - path.time(si) * wt);
    }
    out[static_cast<std::size_t>(ti - n)] = *std::max_element(acc.begin(), acc.begin() + (ti - n + 1));
  }
  return out;
}

std::vector<double> profile_q(const BrownianPath& path) {
  const Index n = path.steps_per_unit(), last = path.last_index(), p = path.dim();
  std::vector<double> out(static_cast<std::size_t>(last - n + 1), 0.0);
  for (Index ti = n; ti <= last; ++ti) {
    const double t = path.time(ti);
    double v = 0.0;
    for (Index c = 0; c < p; ++c) v += sq(path(c, ti) - t * path(c, n));
    out[static_cast<std::size_t>(ti - n)] = v;
  }
  return out;
}

std::vector<double> profile_p(const BrownianPath& path) {
  const Index n = path.steps_per_unit(), last = path.last_index(), p = path.dim();
  std::vector<double> out(static_cast<std::size_t>(last - n + 1), 0.0);
  if (p == 1) {
    const double* w = path.component(0);
    const double w1 = w[n];
    double amax = -std::numeric_limits<double>::infinity(), amin = std::numeric_limits<double>::infinity();
    for (Index ti = n; ti <= last; ++ti) {
      const double a = path.time(ti) * w1 - w[ti];
      amax = std::max(amax, a);
      amin = std::min(amin, a);
      const double c = w[ti] - path.time(ti) * w1;
      out[static_cast<std::size_t>(ti - n)] = std::max(sq(amax + c), sq(amin + c));
    }
    return out;
  }
  std::vector<double> acc(static_cast<std::size_t>(last + 1));
  for (Index ti = n; ti <= last; ++ti) {
    const double t = path.time(ti);
    std::fill(acc.begin(), acc.begin() + (ti - n + 1), 0.0);
    for (Index c = 0; c < p; ++c) {
      const double* w = path.component(c);
      const double w1 = w[n];
      const double ct = w[ti] - t * w1;
      for (Index si = n; si <= ti; ++si) acc[static_cast<std::size_t>(si - n)] += sq(path.time(si) * w1 - w[si] + ct);
    }
    out[static_cast<std::size_t>(ti - n)] = *std::max_element(acc.begin(), acc.begin() + (ti - n + 1));
  }
  return out;
}

// Prefix sums over grid indices q < i of 1, r, r^2, W, rW and W W^T (packed
// upper triangle), r = q / steps. Any left-Riemann integral of v v^T with
// v(r) = a W(r) + b r + g reduces to O(p^2) work from these.
struct PathMoments {
  Index p, q;
  std::vector<double> s0, sr, srr, sw, srw, sww;

  explicit PathMoments(const BrownianPath& path)
      : p(path.dim()), q(path.dim() * (path.dim() + 1) / 2) {
    const Index g = path.last_index() + 1;
    s0.assign(static_cast<std::size_t>(g + 1), 0.0);
    sr = s0;
    srr = s0;
    sw.assign(static_cast<std::size_t>((g + 1) * p), 0.0);
    srw = sw;
    sww.assign(static_cast<std::size_t>((g + 1) * q), 0.0);
    for (Index i = 0; i < g; ++i) {
      const double r = path.time(i);
      s0[i + 1] = s0[i] + 1.0;
      sr[i + 1] = sr[i] + r;
      srr[i + 1] = srr[i] + r * r;
      Index k = 0;
      for (Index c = 0; c < p; ++c) {
        const double wc = path(c, i);
        sw[(i + 1) * p + c] = sw[i * p + c] + wc;
        srw[(i + 1) * p + c] = srw[i * p + c] + r * wc;
        for (Index d = c; d < p; ++d, ++k) sww[(i + 1) * q + k] = sww[i * q + k] + wc * path(d, i);
      }
    }
  }

  // out (p x p row-major) += h * sum_{lo <= q < hi} v v^T, v = a W + b r + g.
  void accumulate(Index lo, Index hi, double a, const double* b, const double* g, double h, double* out) const {
    if (hi <= lo) return;
    const double n = s0[hi] - s0[lo];
    const double r1 = sr[hi] - sr[lo];
    const double r2 = srr[hi] - srr[lo];
    const double* w_hi = &sw[hi * p];
    const double* w_lo = &sw[lo * p];
    const double* rw_hi = &srw[hi * p];
    const double* rw_lo = &srw[lo * p];
    const double* ww_hi = &sww[hi * q];
    const double* ww_lo = &sww[lo * q];
    Index k = 0;
    for (Index c = 0; c < p; ++c) {
      const double wc = w_hi[c] - w_lo[c];
      const double rwc = rw_hi[c] - rw_lo[c];
      for (Index d = c; d < p; ++d, ++k) {
        const double wd = w_hi[d] - w_lo[d];
        const double rwd = rw_hi[d] - rw_lo[d];
        const double ww = ww_hi[k] - ww_lo[k];
        const double v = a * a * ww + a * (rwc * b[d] + b[c] * rwd) + a * (wc * g[d] + g[c] * wd) +
                         r2 * b[c] * b[d] + r1 * (b[c] * g[d] + g[c] * b[d]) + n * g[c] * g[d];
        out[c * p + d] += h * v;
        if (d != c) out[d * p + c] += h * v;
      }
    }
  }
};

void profile_sn(const BrownianPath& path, std::vector<double>* dsn, std::vector<double>* psn) {
  const Index n = path.steps_per_unit(), last = path.last_index(), p = path.dim();
  const double h = 1.0 / static_cast<double>(n);
  const auto len = static_cast<std::size_t>(last - n + 1);
  if (dsn) dsn->assign(len, 0.0);
  if (psn) psn->assign(len, 0.0);
  const PathMoments mom(path);
  const auto pp = static_cast<std::size_t>(p * p);

  // N1(s) for every s in [1, T+1].
  std::vector<double> n1(len * pp, 0.0);
  std::vector<double> beta(static_cast<std::size_t>(p)), gamma(static_cast<std::size_t>(p), 0.0);
  for (Index si = n; si <= last; ++si) {
    for (Index c = 0; c < p; ++c) beta[c] = -path(c, si);
    mom.accumulate(0, si, path.time(si), beta.data(), gamma.data(), h, &n1[(si - n) * pp]);
  }

  std::vector<double> mat(pp), work(pp), vec(static_cast<std::size_t>(p)), b(static_cast<std::size_t>(p)),
      pv(static_cast<std::size_t>(p));
  for (Index ti = n; ti <= last; ++ti) {
    const double t = path.time(ti);
    double best_d = 0.0, best_p = 0.0;
    for (Index si = n; si <= ti; ++si) {
      const double s = path.time(si);
      std::copy_n(&n1[(si - n) * pp], pp, mat.begin());
      for (Index c = 0; c < p; ++c) {
        beta[c] = path(c, si) - path(c, ti);
        gamma[c] = s * path(c, ti) - t * path(c, si);
        b[c] = t * path(c, si) - s * path(c, ti);
        pv[c] = s * path(c, n) - path(c, si) + path(c, ti) - t * path(c, n);
      }
      mom.accumulate(si, ti, t - s, beta.data(), gamma.data(), h, mat.data());
      if (dsn) {
        std::copy(mat.begin(), mat.end(), work.begin());
        std::copy(b.begin(), b.end(), vec.begin());
        const double v = chol_quadratic(work.data(), vec.data(), p);
        if (!std::isnan(v)) best_d = std::max(best_d, v);
      }
      if (psn) {
        std::copy(mat.begin(), mat.end(), work.begin());
        std::copy(pv.begin(), pv.end(), vec.begin());
        const double v = chol_quadratic(work.data(), vec.data(), p);
        if (!std::isnan(v)) best_p = std::max(best_p, v);
      }
    }
    if (dsn) (*dsn)[static_cast<std::size_t>(ti - n)] = best_d;
    if (psn) (*psn)[static_cast<std::size_t>(ti - n)] = best_p;
  }
}

}  // namespace

std::string_view to_string(ThresholdFamily family) {
  switch (family) {
    case ThresholdFamily::T1: return "T1";
    case ThresholdFamily::T2: return "T2";
    case ThresholdFamily::T3: return "T3";
  }
  return "?";
}

ThresholdFamily parse_threshold_family(std::string_view text) {
  if (text == "T1") return ThresholdFamily::T1;
  if (text == "T2") return ThresholdFamily::T2;
  if (text == "T3") return ThresholdFamily::T3;
  throw ConfigError("unknown threshold family '" + std::string(text) + "'");
}

double threshold_shape(ThresholdFamily family, double t) {
  switch (family) {
    case ThresholdFamily::T1: return 1.0;
    case ThresholdFamily::T2: return sq(t + 1.0);
    case ThresholdFamily::T3: return sq(t + 1.0) * std::max(std::sqrt(t / (t + 1.0)), 1e-10);
  }
  return 1.0;
}

Index LimitGrid::last_index() const {
  if (steps_per_unit < 1) throw ConfigError("steps_per_unit must be positive");
  if (replicates < 1) throw ConfigError("replicates must be positive");
  if (p < 1) throw ConfigError("dimension p must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("horizon factor T must be finite and non-negative");
  const double x = static_cast<double>(steps_per_unit) * (T + 1.0);
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-6 * std::max(1.0, x)) {
    throw ConfigError("steps_per_unit * (T + 1) must be an integer");
  }
  return static_cast<Index>(r);
}

BrownianPath::BrownianPath(Index dim, Index steps_per_unit, Index last_index)
    : dim_(dim), steps_(steps_per_unit), last_(last_index),
      w_(static_cast<std::size_t>(dim * (last_index + 1)), 0.0) {
  if (dim < 1 || steps_per_unit < 1 || last_index < 0) throw ConfigError("invalid Brownian path shape");
}

BrownianPath BrownianPath::simulate(Index dim, Index steps_per_unit, Index last_index, std::mt19937_64& rng) {
  BrownianPath path(dim, steps_per_unit, last_index);
  std::normal_distribution<double> normal;
  const double scale = std::sqrt(1.0 / static_cast<double>(steps_per_unit));
  for (Index i = 1; i <= last_index; ++i) {
    for (Index c = 0; c < dim; ++c) path(c, i) = path(c, i - 1) + scale * normal(rng);
  }
  return path;
}

BrownianPath BrownianPath::coarsen(Index factor) const {
  if (factor < 1 || steps_ % factor != 0 || last_ % factor != 0) {
    throw ConfigError("coarsening factor must divide the grid");
  }
  BrownianPath out(dim_, steps_ / factor, last_ / factor);
  for (Index c = 0; c < dim_; ++c) {
    for (Index i = 0; i <= out.last_; ++i) out(c, i) = (*this)(c, i * factor);
  }
  return out;
}

std::vector<double> limit_profile(DetectorKind kind, const BrownianPath& path) {
  if (path.last_index() < path.steps_per_unit()) throw ConfigError("path must cover [0, 1]");
  switch (kind) {
    case DetectorKind::D: return profile_d(path);
    case DetectorKind::P: return profile_p(path);
    case DetectorKind::Q: return profile_q(path);
    case DetectorKind::DSN: {
      std::vector<double> out;
      profile_sn(path, &out, nullptr);
      return out;
    }
    case DetectorKind::PSN: {
      std::vector<double> out;
      profile_sn(path, nullptr, &out);
      return out;
    }
  }
  return {};
}

std::vector<std::vector<double>> limit_profiles(const std::vector<DetectorKind>& kinds, const BrownianPath& path) {
  std::vector<std::vector<double>> out(kinds.size());
  std::vector<double> dsn, psn;
  const bool want_dsn = std::find(kinds.begin(), kinds.end(), DetectorKind::DSN) != kinds.end();
  const bool want_psn = std::find(kinds.begin(), kinds.end(), DetectorKind::PSN) != kinds.end();
  if (want_dsn || want_psn) {
    if (path.last_index() < path.steps_per_unit()) throw ConfigError("path must cover [0, 1]");
    profile_sn(path, want_dsn ? &dsn : nullptr, want_psn ? &psn : nullptr);
  }
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] == DetectorKind::DSN) {
      out[i] = dsn;
    } else if (kinds[i] == DetectorKind::PSN) {
      out[i] = psn;
    } else {
      out[i] = limit_profile(kinds[i], path);
    }
  }
  return out;
}

double profile_supremum(const std::vector<double>& profile, ThresholdFamily family, Index steps_per_unit) {
  double best = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(steps_per_unit);
    best = std::max(best, profile[i] / threshold_shape(family, u));
  }
  return best;
}

BrownianPath replicate_path(const LimitGrid& grid, std::uint64_t replicate) {
  auto rng = stream_rng(grid.seed, replicate);
  return BrownianPath::simulate(grid.p, grid.steps_per_unit, grid.last_index(), rng);
}

double simulate_limit_path(DetectorKind kind, const LimitGrid& grid, ThresholdFamily family,
                           std::uint64_t replicate) {
  const BrownianPath path = replicate_path(grid, replicate);
  return profile_supremum(limit_profile(kind, path), family, grid.steps_per_unit);
}

namespace reference {

namespace {

Eigen::VectorXd w_at(const BrownianPath& path, Index i) {
  Eigen::VectorXd w(path.dim());
  for (Index c = 0; c < path.dim(); ++c) w[c] = path(c, i);
  return w;
}

// B(a, b) = b W(a) - a W(b) at grid indices.
Eigen::VectorXd bridge(const BrownianPath& path, Index a, Index b) {
  return path.time(b) * w_at(path, a) - path.time(a) * w_at(path, b);
}

}  // namespace

double limit_functional(DetectorKind kind, const BrownianPath& path, Index s_idx, Index t_idx) {
  const Index n = path.steps_per_unit();
  if (s_idx < n || s_idx > t_idx || t_idx > path.last_index()) throw ConfigError("need 1 <= s <= t <= T+1");
  const Eigen::VectorXd b = bridge(path, s_idx, t_idx);
  const Eigen::VectorXd pv = bridge(path, n, s_idx) + bridge(path, t_idx, n);
  switch (kind) {
    case DetectorKind::D: return b.squaredNorm();
    case DetectorKind::Q: return bridge(path, t_idx, n).squaredNorm();
    case DetectorKind::P: return pv.squaredNorm();
    case DetectorKind::DSN:
    case DetectorKind::PSN: break;
  }
  const Index p = path.dim();
  const double h = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd nm = Eigen::MatrixXd::Zero(p, p);
  for (Index q = 0; q < s_idx; ++q) {
    const Eigen::VectorXd v = bridge(path, q, s_idx);
    nm += h * v * v.transpose();
  }
  for (Index q = s_idx; q < t_idx; ++q) {
    const Eigen::VectorXd v = bridge(path, q, t_idx) + bridge(path, s_idx, q) - b;
    nm += h * v * v.transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(nm, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv.minCoeff() > kSingularRcond * sv.maxCoeff())) return kNaN;
  const Eigen::VectorXd& x = kind == DetectorKind::DSN ? b : pv;
  return x.dot(svd.solve(x));
}

std::vector<double> limit_profile(DetectorKind kind, const BrownianPath& path) {
  const Index n = path.steps_per_unit(), last = path.last_index();
  std::vector<double> out(static_cast<std::size_t>(last - n + 1), 0.0);
  for (Index ti = n; ti <= last; ++ti) {
    double best = 0.0;
    const Index s_last = kind == DetectorKind::Q ? n : ti;
    for (Index si = n; si <= s_last; ++si) {
      const double v = limit_functional(kind, path, si, ti);
      if (!std::isnan(v)) best = std::max(best, v);
    }
    out[static_cast<std::size_t>(ti - n)] = best;
  }
  return out;
}

}  // namespace reference

}  // namespace seqmon
