#pragma once

#include <functional>

#include "qnls/grid.hpp"

namespace qnls {

// Ground state of phi'' - alpha phi + phi^5 = 0:
//   phi0(x, alpha) = (3 alpha)^{1/4} sech^{1/2}(2 sqrt(alpha) x).
// Positive, even, decays like exp(-sqrt(alpha) |x|).
double phi0(double x, double alpha = 1.0);
// First and second x-derivatives of phi0(., alpha).
double phi0_dx(double x, double alpha = 1.0);
double phi0_dxx(double x, double alpha = 1.0);
// Third x-derivative of phi0(., 1).
double phi0_dxxx(double x);

struct StandingWaveParams {
  double alpha = 1.0;
};

// Galilei transformation parameters: phase gamma, velocity v, shift mu0.
struct GalileiParams {
  double gamma = 0.0;
  double v = 0.0;
  double mu0 = 0.0;
};

// Applying g then g2 equals applying compose(g2, g).
GalileiParams compose(const GalileiParams& second, const GalileiParams& first);

// Matrix (a b; c d) with unit determinant.
struct SL2Params {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  // Throws UsageError unless |ad - bc - 1| <= 1e-12.
  void validate() const;
  static SL2Params identity() { return {}; }
};

// A solution known at every (t, x).
using SpacetimeField = std::function<cplx(double t, double x)>;

ComplexField sample_at(const SpacetimeField& psi, double t, const GridPtr& grid);

// exp(i alpha t) phi0(x, alpha)
SpacetimeField standing_wave_solution(double alpha = 1.0);
ComplexField standing_wave(double t, double alpha, const GridPtr& grid);

// psi -> exp(i(gamma + v x - v^2 t)) psi(t, x - 2 t v - mu0)
SpacetimeField galilei(SpacetimeField psi, const GalileiParams& g);
ComplexField galilei_apply(const SpacetimeField& psi, const GalileiParams& g, double t,
                           const GridPtr& grid);

// psi -> (a+bt)^{-1/2} exp(i b x^2 / 4(a+bt)) psi((c+dt)/(a+bt), x/(a+bt)),
// defined for a + b t > 0 only.
SpacetimeField sl2(SpacetimeField psi, const SL2Params& m);
ComplexField sl2_apply(const SpacetimeField& psi, const SL2Params& m, double t,
                       const GridPtr& grid);
// Same action when psi is only known as grid samples at the source time
// s = (c+dt)/(a+bt); off-grid values come from band-limited interpolation and
// points mapped outside the source window are taken as zero.
ComplexField sl2_apply_samples(const ComplexField& psi_at_source_time, const SL2Params& m,
                               double t);

// Explicit blow-up solution
//   f(t,x) = (a+bt)^{-1/2} e^{i(c+dt)/(a+bt)} e^{ibx^2/4(a+bt)} phi0(x/(a+bt), 1),
// singular at t = -a/b.
SpacetimeField explicit_blowup_solution(const SL2Params& m);
ComplexField explicit_blowup(double t, const GridPtr& grid, const SL2Params& m);

// Parameters of the Galilei-boosted pseudo-conformal standing wave.
struct ExactWaveParams {
  double a = 1.0;
  double b = -1.0;
  double v = 0.0;
  double gamma = 0.0;
  double mu0 = 0.0;
};

// Closed-form modulated soliton W(t, x) for the exact (radiation-free) case.
SpacetimeField exact_modulated_solution(const ExactWaveParams& p);
ComplexField exact_modulated_W(double t, const GridPtr& grid, const ExactWaveParams& p);
// The same wave assembled as Galilei(gamma, v, mu0) o SL2(a, b; -1/b, 0)
// acting on exp(it) phi0.
SpacetimeField exact_modulated_by_symmetries(const ExactWaveParams& p);

// max_j | i (psi(t+d) - psi(t-d)) / 2d + psi_xx + |psi|^4 psi | at time t.
double pde_residual(const ComplexField& before, const ComplexField& now, const ComplexField& after,
                    double delta);

// Least-squares constant phase c minimizing ||a - e^{ic} b||; returns
// max |a - e^{ic} b|.
double max_diff_modulo_phase(const ComplexField& a, const ComplexField& b);

}  // namespace qnls
