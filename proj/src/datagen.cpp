#include "seqmon/datagen.hpp"

#include "seqmon/errors.hpp"
#include "seqmon/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <string>

namespace seqmon {

namespace {

Eigen::Matrix2d a1() { return (Eigen::Matrix2d() << 0.2, 0.1, 0.1, 0.2).finished(); }
Eigen::Matrix2d a2() { return (Eigen::Matrix2d() << 0.3, 0.1, 0.1, 0.3).finished(); }
Eigen::Matrix2d a3() { return (Eigen::Matrix2d() << 0.1, 0.05, 0.05, 0.1).finished(); }
Eigen::Matrix3d a4() {
  Eigen::Matrix3d a = Eigen::Matrix3d::Constant(0.05);
  a.diagonal().setConstant(0.1);
  return a;
}

ModelKind dynamics(const ModelSpec& spec) { return spec.model == ModelKind::Corr ? spec.corr_base : spec.model; }

}  // namespace

std::string_view to_string(ModelKind model) {
  switch (model) {
    case ModelKind::M1: return "M1";
    case ModelKind::M2: return "M2";
    case ModelKind::M3: return "M3";
    case ModelKind::M4: return "M4";
    case ModelKind::V1: return "V1";
    case ModelKind::V2: return "V2";
    case ModelKind::V3: return "V3";
    case ModelKind::V4: return "V4";
    case ModelKind::Corr: return "Corr";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto m : {ModelKind::M1, ModelKind::M2, ModelKind::M3, ModelKind::M4, ModelKind::V1, ModelKind::V2,
                 ModelKind::V3, ModelKind::V4, ModelKind::Corr}) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("unknown model '" + std::string(text) + "'");
}

ModelSpec ModelSpec::parse(std::string_view text) {
  ModelSpec spec;
  const auto colon = text.find(':');
  spec.model = parse_model_kind(text.substr(0, colon));
  if (colon != std::string_view::npos) {
    if (spec.model != ModelKind::Corr) throw ConfigError("only the Corr model takes a base model");
    spec.corr_base = parse_model_kind(text.substr(colon + 1));
  }
  spec.validate();
  return spec;
}

Index ModelSpec::dim() const {
  switch (model) {
    case ModelKind::M1:
    case ModelKind::M2:
    case ModelKind::M3:
    case ModelKind::M4: return 1;
    case ModelKind::V4: return 3;
    default: return 2;
  }
}

std::string ModelSpec::name() const {
  if (model == ModelKind::Corr) return "Corr:" + std::string(to_string(corr_base));
  return std::string(to_string(model));
}

void ModelSpec::validate() const {
  if (model == ModelKind::Corr && corr_base != ModelKind::V1 && corr_base != ModelKind::V2 &&
      corr_base != ModelKind::V3) {
    throw ConfigError("the Corr model runs on V1, V2 or V3 dynamics");
  }
  if (!(delta > -1.0)) throw ConfigError("variance inflation delta must exceed -1");
  if (model == ModelKind::Corr && !(std::abs(c1) < 1.0 && std::abs(c2) < 1.0)) {
    throw ConfigError("innovation correlations must lie in (-1, 1)");
  }
  if (change < 0) throw ConfigError("change row must be non-negative");
  if (!std::isfinite(mu)) throw ConfigError("mean shift must be finite");
}

Series generate(const ModelSpec& spec, Index n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ConfigError("generate needs n >= 1");
  const Index d = spec.dim();
  const ModelKind dyn = dynamics(spec);
  auto rng = stream_rng(seed, 0);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);

  Series out(d);
  out.reserve(n);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d), e(d), e1 = Eigen::VectorXd::Zero(d), e2 = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd next(d);
  const double inflate = std::sqrt(1.0 + spec.delta);

  // t runs over 1 - kBurnIn .. n; rows t >= 1 are emitted.
  for (Index t = 1 - kBurnIn; t <= n; ++t) {
    const bool after = spec.change > 0 && t >= spec.change;
    if (spec.model == ModelKind::M4) {
      e[0] = expo(rng);
    } else if (spec.model == ModelKind::Corr) {
      const double z1 = normal(rng), z2 = normal(rng);
      const double c = after ? spec.c2 : spec.c1;
      e[0] = z1;
      e[1] = c * z1 + std::sqrt(1.0 - c * c) * z2;
    } else {
      for (Index c = 0; c < d; ++c) e[c] = normal(rng);
    }
    if (after) e *= inflate;

    switch (dyn) {
      case ModelKind::M1:
      case ModelKind::V1: next = e; break;
      case ModelKind::M2: next[0] = 0.1 * x[0] + e[0]; break;
      case ModelKind::M3: next[0] = e[0] + 0.3 * e1[0] - 0.1 * e2[0]; break;
      case ModelKind::M4: next[0] = 0.3 * x[0] + e[0]; break;
      case ModelKind::V2: next = a1() * x + e; break;
      case ModelKind::V3: next = e + a2() * e1 + a3() * e2; break;
      case ModelKind::V4: next = a4() * x + e; break;
      case ModelKind::Corr: break;
    }
    x = next;
    e2 = e1;
    e1 = e;
    if (t >= 1) {
      if (after && spec.mu != 0.0) {
        out.append((x.array() + spec.mu).matrix());
      } else {
        out.append(x);
      }
    }
  }
  return out;
}

}  // namespace seqmon
