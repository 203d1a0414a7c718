#include "seqmon/calibration.hpp"
#include "seqmon/detectors.hpp"
#include "seqmon/limit.hpp"
#include "seqmon/reference.hpp"
#include "seqmon/rng.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace seqmon;

namespace {

Series normal_series(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c) x(i, c) = z(rng);
  return Series::from_matrix(x);
}

DetectorKind kind_arg(const benchmark::State& state) { return static_cast<DetectorKind>(state.range(0)); }

void set_kind_label(benchmark::State& state) { state.SetLabel(std::string(to_string(kind_arg(state)))); }

// One full monitoring pass (m training rows, m monitoring steps) with the
// incremental detector state.
void BM_StreamingPass(benchmark::State& state) {
  const Index m = state.range(1);
  const Series s = normal_series(2 * m, 1, 1);
  const auto f = FunctionalKind::mean(1);
  const LrvEstimate lrv = lrv_for_functional(f, s, m);
  const DetectorKind kind = kind_arg(state);
  for (auto _ : state) {
    DetectorState st(kind, f, s.slice(0, m), is_self_normalized(kind) ? std::nullopt : std::optional(lrv));
    double acc = 0.0;
    for (Index t = m; t < 2 * m; ++t) acc += st.push(s.row(t)).value;
    benchmark::DoNotOptimize(acc);
  }
  set_kind_label(state);
}

// The same pass evaluated from the definition at every step.
void BM_NaivePass(benchmark::State& state) {
  const Index m = state.range(1);
  const Series s = normal_series(2 * m, 1, 1);
  const auto f = FunctionalKind::mean(1);
  const LrvEstimate lrv = lrv_for_functional(f, s, m);
  const DetectorKind kind = kind_arg(state);
  for (auto _ : state) {
    double acc = 0.0;
    for (Index k = 1; k <= m; ++k) acc += reference::detector_value(kind, f, s.slice(0, m + k), m, k, &lrv).value;
    benchmark::DoNotOptimize(acc);
  }
  set_kind_label(state);
}

void BM_LimitProfileFast(benchmark::State& state) {
  auto rng = stream_rng(3, 0);
  const BrownianPath path = BrownianPath::simulate(1, state.range(1), 2 * state.range(1), rng);
  for (auto _ : state) benchmark::DoNotOptimize(limit_profile(kind_arg(state), path));
  set_kind_label(state);
}

void BM_LimitProfileReference(benchmark::State& state) {
  auto rng = stream_rng(3, 0);
  const BrownianPath path = BrownianPath::simulate(1, state.range(1), 2 * state.range(1), rng);
  for (auto _ : state) benchmark::DoNotOptimize(reference::limit_profile(kind_arg(state), path));
  set_kind_label(state);
}

LimitGrid suprema_grid() {
  LimitGrid g;
  g.steps_per_unit = 200;
  g.replicates = 2000;
  return g;
}

void BM_SupremaParallel(benchmark::State& state) {
  const LimitGrid g = suprema_grid();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_suprema(kind_arg(state), g, ThresholdFamily::T1));
  set_kind_label(state);
}

void BM_SupremaSerial(benchmark::State& state) {
  const LimitGrid g = suprema_grid();
  for (auto _ : state) benchmark::DoNotOptimize(serial::simulate_suprema(kind_arg(state), g, ThresholdFamily::T1));
  set_kind_label(state);
}

constexpr int kD = static_cast<int>(DetectorKind::D);
constexpr int kP = static_cast<int>(DetectorKind::P);
constexpr int kDSN = static_cast<int>(DetectorKind::DSN);

}  // namespace

BENCHMARK(BM_StreamingPass)->Args({kD, 100})->Args({kP, 100})->Args({kDSN, 100})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NaivePass)->Args({kD, 100})->Args({kP, 100})->Args({kDSN, 30})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LimitProfileFast)->Args({kD, 200})->Args({kDSN, 50})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LimitProfileReference)->Args({kD, 200})->Args({kDSN, 50})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SupremaParallel)->Arg(kD)->Arg(kP)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SupremaSerial)->Arg(kD)->Arg(kP)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
