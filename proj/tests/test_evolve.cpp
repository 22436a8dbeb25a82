#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qnls/errors.hpp"
#include "qnls/evolve.hpp"
#include "qnls/soliton.hpp"
#include "qnls/spectral.hpp"

using namespace qnls;

namespace {

ComplexField conj_field(const ComplexField& f) { return f.conj(); }

SolverConfig quick(double t_end, double dt0 = 1e-3) {
  SolverConfig c;
  c.t_end = t_end;
  c.dt0 = dt0;
  c.snapshot_interval = t_end / 10.0;
  return c;
}

}  // namespace

// Closed-form invariants of phi0: E = 0 (L^2-critical Pohozaev identity),
// ||phi0||^2 = sqrt(3) pi / 2, ||x phi0||^2 = sqrt(3) pi^3 / 32.
TEST(Invariants, GroundStateValues) {
  const GridPtr g = make_grid(40.0, 1024);
  const ComplexField phi = standing_wave(0.0, 1.0, g);
  EXPECT_NEAR(mass(phi), std::sqrt(3.0) * std::numbers::pi / 2.0, 1e-12);
  EXPECT_NEAR(energy(phi), 0.0, 1e-12);
  EXPECT_NEAR(pconf_norm(phi, 0.0), std::sqrt(3.0) * std::pow(std::numbers::pi, 3) / 32.0, 1e-10);
  EXPECT_NEAR(pconf_energy(phi, 0.0), pconf_norm(phi, 0.0), 1e-15);
}

TEST(SplitStep, SecondOrderOnStandingWave) {
  const GridPtr g = make_grid(40.0, 1024);
  auto error = [&](int steps) {
    ComplexField psi = standing_wave(0.0, 1.0, g);
    for (int k = 0; k < steps; ++k) psi = split_step(psi, 1.0 / steps);
    return max_abs(psi - standing_wave(1.0, 1.0, g));
  };
  const double e1 = error(500), e2 = error(1000);
  EXPECT_LT(e2, 1e-4);
  EXPECT_NEAR(e1 / e2, 4.0, 0.1);
}

TEST(Run, ConservesMassAndEnergy) {
  const GridPtr g = make_grid(40.0, 2048);
  const Trajectory tr = run(standing_wave(0.0, 1.0, g), quick(2.0));
  ASSERT_EQ(tr.stop, StopReason::Completed);
  const auto& d0 = tr.diagnostics.front();
  for (const auto& d : tr.diagnostics) {
    EXPECT_LT(std::abs(d.mass - d0.mass) / d0.mass, 1e-12);
    EXPECT_LT(std::abs(d.energy - d0.energy) / (d0.h1 * d0.h1), 1e-5);
  }
  EXPECT_LT(max_diff_modulo_phase(tr.snapshots.back(), standing_wave(2.0, 1.0, g)), 1e-5);
}

TEST(Run, SnapshotsAtRequestedTimes) {
  const GridPtr g = make_grid(40.0, 512);
  SolverConfig c = quick(0.3);
  c.snapshot_interval = 0.1;
  c.tail_fraction = 1.0;
  const Trajectory tr = run(standing_wave(0.0, 1.0, g), c);
  ASSERT_EQ(tr.times.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(tr.times[i], 0.1 * i, 1e-12);
  EXPECT_EQ(tr.snapshots.size(), tr.diagnostics.size());
}

TEST(Run, Deterministic) {
  const GridPtr g = make_grid(20.0, 1024);
  const SL2Params m{1.0, -1.0, 0.0, 1.0};
  const Trajectory a = run(explicit_blowup(0.0, g, m), quick(0.3));
  const Trajectory b = run(explicit_blowup(0.0, g, m), quick(0.3));
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) EXPECT_EQ(a.snapshots[i].data(), b.snapshots[i].data());
  EXPECT_EQ(a.steps, b.steps);
}

// psi(t) solves the equation iff conj(psi(-t)) does.
TEST(Equivariance, TimeReversal) {
  const GridPtr g = make_grid(30.0, 2048);
  const ComplexField psi0 = galilei_apply(standing_wave_solution(), {0.1, 0.6, -1.0}, 0.0, g) +
                            0.2 * galilei_apply(standing_wave_solution(), {0.0, -0.4, 3.0}, 0.0, g);
  SolverConfig c = quick(0.5, 2e-4);
  c.adaptive = false;
  const Trajectory fwd = run(psi0, c);
  ASSERT_EQ(fwd.stop, StopReason::Completed);
  const Trajectory back = run(conj_field(fwd.snapshots.back()), c);
  ASSERT_EQ(back.stop, StopReason::Completed);
  EXPECT_LT(norm(conj_field(back.snapshots.back()) - psi0) / norm(psi0), 1e-5);
}

TEST(Equivariance, Galilei) {
  const GridPtr g = make_grid(40.0, 2048);
  const GalileiParams gp{0.3, 0.7, -2.0};
  const SpacetimeField boosted = galilei(standing_wave_solution(), gp);
  SolverConfig c = quick(1.0, 5e-4);
  const Trajectory tr = run(sample_at(boosted, 0.0, g), c);
  ASSERT_EQ(tr.stop, StopReason::Completed);
  EXPECT_LT(norm(tr.snapshots.back() - sample_at(boosted, 1.0, g)) / norm(tr.snapshots.back()), 1e-5);
}

TEST(Identities, NullForm) {
  const GridPtr g = make_grid(30.0, 1024);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const double c = 4.0 * u(rng), w = 1.0 + 0.5 * u(rng), kk = 2.0 * u(rng);
    const cplx a(u(rng), u(rng));
    const ComplexField f = sample(g, [&](double x) {
      const double y = (x - c) / w;
      return a * std::exp(-y * y) * std::polar(1.0, kk * x);
    });
    EXPECT_LT(null_form_check(f, u(rng)), 1e-10);
  }
}

TEST(Guards, SupThresholdStopsBeforeBlowup) {
  const GridPtr g = make_grid(20.0, 4096);
  const SL2Params m{1.0, -1.0, 0.0, 1.0};
  SolverConfig c = quick(1.0);
  c.sup_threshold = 3.0 * phi0(0.0);
  const Trajectory tr = run(explicit_blowup(0.0, g, m), c);
  EXPECT_EQ(tr.stop, StopReason::SupThreshold);
  EXPECT_FALSE(is_failure(tr.stop));
  // sup |psi(t)| = phi0(0) / sqrt(1 - t) reaches 3 phi0(0) at t = 8/9.
  EXPECT_NEAR(tr.t_stop, 8.0 / 9.0, 5e-3);
  EXPECT_NE(tr.stop_message.find("blow-up"), std::string::npos);
}

TEST(Guards, WraparoundIsAFailure) {
  const GridPtr g = make_grid(20.0, 1024);
  const ComplexField psi0 = galilei_apply(standing_wave_solution(), {0.0, 5.0, 10.0}, 0.0, g);
  SolverConfig c = quick(2.0);
  c.tail_fraction = 1.0;
  const Trajectory tr = run(psi0, c);
  EXPECT_EQ(tr.stop, StopReason::Wraparound);
  EXPECT_TRUE(is_failure(tr.stop));
  EXPECT_LT(tr.t_stop, 2.0);
}

TEST(Guards, UnderresolvedGridStops) {
  const GridPtr g = make_grid(20.0, 256);
  const SL2Params m{1.0, -1.0, 0.0, 1.0};
  const Trajectory tr = run(explicit_blowup(0.0, g, m), quick(0.99));
  EXPECT_EQ(tr.stop, StopReason::Underresolved);
  EXPECT_FALSE(is_failure(tr.stop));
}

TEST(Guards, ZeroDataIsTrivial) {
  const GridPtr g = make_grid(10.0, 64);
  const Trajectory tr = run(ComplexField(g), quick(0.5));
  EXPECT_EQ(tr.stop, StopReason::Completed);
  EXPECT_EQ(max_abs(tr.snapshots.back()), 0.0);
}

TEST(Config, Validation) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dt0 = 0.0;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.snapshot_interval = -1.0;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.sup_threshold = 0.0;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(BlowupFit, RecoversSyntheticRate) {
  const GridPtr g = make_grid(10.0, 64);
  Trajectory tr;
  const double T = 0.8, cc = 0.6;
  for (int i = 0; i <= 70; ++i) {
    const double t = 0.01 * i;
    Diagnostics d;
    d.sup = 1.0 / std::sqrt(cc * (T - t));
    d.h1 = 2.0 / (T - t);
    tr.times.push_back(t);
    tr.diagnostics.push_back(d);
    tr.snapshots.emplace_back(g);
  }
  const BlowupFit f = blowup_time_fit(tr);
  EXPECT_NEAR(f.T_est, T, 1e-10);
  EXPECT_NEAR(f.c, cc, 1e-10);
  EXPECT_LT(f.h1_rate_spread, 1e-9);
  EXPECT_GE(f.points, 20);
}

TEST(BlowupFit, RejectsFlatTail) {
  const GridPtr g = make_grid(10.0, 64);
  Trajectory tr;
  for (int i = 0; i <= 50; ++i) {
    Diagnostics d;
    d.sup = 1.0;
    tr.times.push_back(0.01 * i);
    tr.diagnostics.push_back(d);
    tr.snapshots.emplace_back(g);
  }
  EXPECT_THROW(blowup_time_fit(tr), NumericalError);
}
