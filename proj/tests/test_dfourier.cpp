#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qnls/dfourier.hpp"
#include "qnls/errors.hpp"
#include "qnls/spectral.hpp"

using namespace qnls;

namespace {

GridPtr grid() {
  static const GridPtr g = make_grid(40.0, 1024);
  return g;
}

const DistortedSpectrum& spectrum() {
  static const DistortedSpectrum sp = build_spectrum(grid());
  return sp;
}

const DispersiveFlow& flow() {
  static const DispersiveFlow f(grid(), Potential::Soliton);
  return f;
}

ComplexField packet(const GridPtr& g, double c, double w, double k) {
  return sample(g, [=](double x) {
    const double y = (x - c) / w;
    return std::exp(-y * y) * std::polar(1.0, k * x);
  });
}

VectorField random_field(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto one = [&] {
    return cplx(u(rng), u(rng)) * packet(grid(), 3.0 * u(rng), 1.2 + 0.5 * u(rng), 1.5 * u(rng));
  };
  return {one(), one()};
}

// Splitting error at the default step is about 1e-3 over t = 1; the
// comparisons below need a finer step.
const DispersiveFlow& fine_flow() {
  static const DispersiveFlow f(grid(), Potential::Soliton, {.dt = 0.0025});
  return f;
}

}  // namespace

TEST(Jost, FreeOperatorIsReflectionless) {
  JostOptions o;
  o.potential = Potential::Free;
  for (double xi : {-2.0, -0.1, 0.05, 0.7, 3.0}) {
    const ScatteringPoint p = jost_solve(xi, grid(), o);
    EXPECT_LT(std::abs(p.s_coef - 1.0), 1e-8) << xi;
    EXPECT_LT(std::abs(p.r_coef), 1e-8) << xi;
  }
}

TEST(Jost, ScatteringIsUnitary) {
  for (double xi : {-1.5, 0.03, 0.4, 2.0, 8.0}) {
    const ScatteringPoint p = jost_solve(xi, grid());
    EXPECT_NEAR(std::norm(p.s_coef) + std::norm(p.r_coef), 1.0, 1e-10) << xi;
    EXPECT_LT(p.wronskian_drift, 1e-8) << xi;
  }
}

TEST(Jost, ZeroIsRejected) { EXPECT_THROW(jost_solve(0.0, grid()), UsageError); }

TEST(Jost, MirroredConventionForNegativeXi) {
  // phi0 is even, so s(-xi) = s(xi).
  const ScatteringPoint a = jost_solve(0.8, grid()), b = jost_solve(-0.8, grid());
  EXPECT_LT(std::abs(a.s_coef - b.s_coef), 1e-9);
}

TEST(Edge, NoResonanceAtThreshold) {
  const EdgeValues ev = edge_check(grid(), Potential::Soliton);
  EXPECT_LT(std::abs(ev.s0), 1e-2);
  EXPECT_LT(std::abs(ev.r0 + 1.0), 1e-2);
  const EdgeValues free = edge_check(grid(), Potential::Free);
  EXPECT_LT(std::abs(free.s0 - 1.0), 1e-8);
}

TEST(Window, SmoothCutoff) {
  EXPECT_EQ(frequency_window(0.3, 1.0, 1.6), 1.0);
  EXPECT_EQ(frequency_window(-1.0, 1.0, 1.6), 1.0);
  EXPECT_EQ(frequency_window(1.6, 1.0, 1.6), 0.0);
  EXPECT_EQ(frequency_window(-5.0, 1.0, 1.6), 0.0);
  const double mid = frequency_window(1.3, 1.0, 1.6);
  EXPECT_GT(mid, 0.0);
  EXPECT_LT(mid, 1.0);
  EXPECT_DOUBLE_EQ(frequency_window(1.3, 1.0, 1.6), frequency_window(-1.3, 1.0, 1.6));
}

TEST(Transform, RootVectorsAreInvisible) {
  const RootSpaceBasis& b = *flow().basis();
  const VectorField back = inverse_distorted_transform(distorted_transform(b.eta[2], spectrum()), spectrum());
  EXPECT_LT(norm(back), 1e-2 * norm(b.eta[2]));
}

TEST(Transform, PlancherelOnRandomFields) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 3; ++k) {
    const VectorField f = random_field(rng), h = random_field(rng);
    const VectorField pf = flow().project(f);
    const VectorField back = inverse_distorted_transform(distorted_transform(f, spectrum()), spectrum());
    EXPECT_LT(norm(back - pf), 1e-3 * norm(pf));
    const cplx lhs = inner(pf, h), rhs = distorted_pairing(f, h, spectrum());
    EXPECT_LT(std::abs(lhs - rhs), 1e-3 * norm(pf) * norm(h));
  }
}

TEST(Transform, BandLimitedDatumLiesInDispersiveRange) {
  const VectorField g = VectorField::from_scalar(packet(grid(), 0.5, 1.0, 0.0));
  const VectorField d = band_limited_datum(g, spectrum(), 1.0, 1.6);
  const Projection p = project(d, *flow().basis());
  for (const cplx& l : p.lambda) EXPECT_LT(std::abs(l), 1e-6 * norm(d));
}

// The time stepper against the transform multiplier.
TEST(Flow, StepperMatchesTransformMultiplier) {
  std::mt19937_64 rng(23);
  const VectorField f = random_field(rng);
  const double t = 1.0;
  const VectorField a = fine_flow().evolve(f, t);
  const VectorField b = evolve_by_transform(f, t, spectrum());
  EXPECT_LT(norm(a - b), 1e-3 * norm(a));
}

// For H_0 the flow is the Fourier multiplier exp(-+ i t (1 + k^2)).
TEST(Flow, FreeFlowIsFourierMultiplier) {
  const DispersiveFlow free(grid(), Potential::Free);
  const VectorField f{packet(grid(), 0.0, 1.0, 1.0), packet(grid(), 1.0, 2.0, -0.5)};
  const double t = 2.0;
  const VectorField got = free.evolve(f, t);
  const auto k = grid()->wavenumbers();
  std::vector<cplx> up(k.size()), lo(k.size());
  for (std::size_t m = 0; m < k.size(); ++m) {
    up[m] = std::polar(1.0, -t * (1.0 + k[m] * k[m]));
    lo[m] = std::conj(up[m]);
  }
  const VectorField want{apply_symbol(f.upper, up), apply_symbol(f.lower, lo)};
  EXPECT_LT(norm(got - want), 1e-10 * norm(f));
}

TEST(Flow, CrankNicolsonAgreesWithSplitting) {
  std::mt19937_64 rng(29);
  const VectorField f = random_field(rng);
  LinearEvolver::Options o;
  o.scheme = LinearScheme::CrankNicolson;
  o.dt = 0.0025;
  const DispersiveFlow cn(grid(), Potential::Soliton, o);
  const VectorField a = evolve_linear(0.5, f, cn);
  const VectorField b = fine_flow().evolve(f, 0.5);
  EXPECT_LT(norm(a - b), 1e-3 * norm(b));
}

TEST(Decay, FitRecoversPowerLaw) {
  // Synthetic samples with sup = 3 t^{-1/2}.
  const GridPtr g = make_grid(40.0, 256);
  std::vector<double> times;
  std::vector<VectorField> fields;
  for (double t = 5.0; t <= 50.0; t += 5.0) {
    times.push_back(t);
    fields.push_back(VectorField::from_scalar(3.0 / std::sqrt(t) * packet(g, 0.0, 1.0, 0.0)));
  }
  const DecayFit fit = decay_fit_from_samples(fields, times, 0.0);
  EXPECT_NEAR(fit.slope, -0.5, 1e-12);
  EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-12);
}

TEST(Decay, WraparoundIsDetected) {
  const GridPtr g = make_grid(40.0, 256);
  const std::vector<double> times{5.0, 10.0, 15.0};
  const std::vector<VectorField> fields(3, VectorField::from_scalar(packet(g, 38.0, 1.0, 0.0)));
  EXPECT_THROW(decay_fit_from_samples(fields, times, 0.0), NumericalError);
}

// P_s is an oblique projection and H is not self-adjoint, so the flow is not
// an L^2 contraction; it is uniformly bounded on the dispersive range.
TEST(Flow, UniformlyBoundedOnDispersiveRange) {
  const VectorField f = VectorField::from_scalar(sample(grid(), [](double x) { return cplx(std::exp(-x * x / 8.0)); }));
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(0.5 * i);
  const auto fields = flow().evolve_samples(f, times);
  EXPECT_LT(norm(fields[0] - flow().project(f)), 1e-12 * norm(f));
  double sup = 0.0;
  for (const auto& g : fields) sup = std::max(sup, norm(g) / norm(f));
  RecordProperty("sup_norm_ratio", std::to_string(sup));
  EXPECT_LT(sup, 3.0);
  EXPECT_GT(sup, 1.0);
}
