#include <benchmark/benchmark.h>

#include <cmath>

#include "qnls/dfourier.hpp"
#include "qnls/evolve.hpp"
#include "qnls/linop.hpp"
#include "qnls/modulation.hpp"
#include "qnls/soliton.hpp"
#include "qnls/spectral.hpp"

using namespace qnls;

static void BM_SpectralDerivative(benchmark::State& state) {
  const GridPtr g = make_grid(40.0, static_cast<int>(state.range(0)));
  const ComplexField f = standing_wave(0.0, 1.0, g);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_derivative(f, 2));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SpectralDerivative)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oNLogN);

static void BM_SplitStep(benchmark::State& state) {
  const GridPtr g = make_grid(20.0, static_cast<int>(state.range(0)));
  ComplexField psi = explicit_blowup(0.0, g, {1.0, -1.0, 0.0, 1.0});
  for (auto _ : state) {
    psi = split_step(psi, 1e-4);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_SplitStep)->Arg(2048)->Arg(8192)->Arg(16384);

// Full adaptive run to t = 0.1, the unit of cost in blow-up studies.
static void BM_RunExplicit(benchmark::State& state) {
  const GridPtr g = make_grid(20.0, 8192);
  const ComplexField psi0 = explicit_blowup(0.0, g, {1.0, -1.0, 0.0, 1.0});
  SolverConfig c;
  c.t_end = 0.1;
  c.snapshot_interval = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(run(psi0, c));
}
BENCHMARK(BM_RunExplicit)->Unit(benchmark::kMillisecond);

static void BM_ApplyH(benchmark::State& state) {
  const GridPtr g = make_grid(40.0, static_cast<int>(state.range(0)));
  const HOperator H(g);
  const VectorField f = VectorField::from_scalar(standing_wave(0.0, 1.0, g));
  for (auto _ : state) benchmark::DoNotOptimize(apply_H(H, f));
}
BENCHMARK(BM_ApplyH)->Arg(1024)->Arg(8192);

static void BM_JostSolve(benchmark::State& state) {
  const GridPtr g = make_grid(40.0, 1024);
  const double xi = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(jost_solve(xi, g));
}
BENCHMARK(BM_JostSolve)->Arg(1)->Arg(10)->Arg(60)->Unit(benchmark::kMicrosecond);

static void BM_RootBasis(benchmark::State& state) {
  const GridPtr g = make_grid(40.0, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(root_basis(g));
}
BENCHMARK(BM_RootBasis)->Unit(benchmark::kMillisecond);

static void BM_Decompose(benchmark::State& state) {
  const GridPtr g = make_grid(20.0, static_cast<int>(state.range(0)));
  const ProfileSet profiles(root_basis(make_grid(40.0, 1024)));
  const ModParams p{1.3, 0.2, 0.4, -0.1, 0.5, 0.0};
  const ComplexField psi = build_W(p, g);
  ModParams guess = p;
  guess.lambda *= 1.01;
  guess.gamma += 0.01;
  for (auto _ : state) benchmark::DoNotOptimize(decompose(psi, 0.0, guess, profiles));
}
BENCHMARK(BM_Decompose)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
