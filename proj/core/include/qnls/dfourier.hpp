#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "qnls/grid.hpp"
#include "qnls/linop.hpp"

namespace qnls {

// Which component of the generalized eigenfunction oscillates at infinity.
// Upper: H e = -(1 + xi^2) e (the e_+ family); Lower: H e = +(1 + xi^2) e,
// which is sigma_1 e_+.
enum class Channel { Upper, Lower };

struct JostOptions {
  Channel channel = Channel::Upper;
  Potential potential = Potential::Soliton;
  // Beyond |x| = match_half_width the potential is below roundoff and the
  // free solutions are used in closed form.
  double match_half_width = 12.0;
  double tolerance = 1e-12;
};

// e_+(., xi) with
//   xi > 0:  e_+ ~ s e^{ix xi}            (x -> +inf),
//            e_+ ~ e^{ix xi} + r e^{-ix xi} (x -> -inf),
// and the mirrored convention (wave incoming from the right) for xi < 0.
// The non-oscillating component decays on both sides.
struct ScatteringPoint {
  double xi = 0.0;
  cplx s_coef{};
  cplx r_coef{};
  VectorField e_plus;
  // max |J(x) - J(0)| / |xi| for the flux J = Im(conj(u) u' + conj(v) v').
  double wronskian_drift = 0.0;
};

// Generalized eigenfunction of H at spectral parameter xi != 0. Throws
// UsageError for xi = 0 and NumericalError on integration failure or when the
// decaying channel is contaminated at the domain boundary.
ScatteringPoint jost_solve(double xi, const GridPtr& grid, const JostOptions& options = {});

// e_-(x, xi) = sigma_1 e_+(x, xi).
VectorField e_minus(const ScatteringPoint& p);

struct SpectrumOptions {
  double dxi = 0.01;
  double xi_max = 6.0;
  // Coarser spacing on [xi_max, xi_far]; the kernels are smooth there.
  double dxi_far = 0.05;
  double xi_far = 24.0;
  // Between xi_far and xi_tail the basis is replaced by its free asymptote.
  double xi_tail = 24.0;
  Potential potential = Potential::Soliton;
  int threads = 0;  // 0: hardware concurrency
};

// Midpoint nodes of consecutive cells, symmetric about 0 and excluding 0.
struct DistortedSpectrum {
  GridPtr grid;
  Potential potential = Potential::Soliton;
  std::vector<double> xi_nodes;
  std::vector<double> weights;  // cell widths
  std::vector<ScatteringPoint> points;
};

DistortedSpectrum build_spectrum(const GridPtr& grid, const SpectrumOptions& options = {});

struct EdgeValues {
  cplx s0{};
  cplx r0{};
  std::vector<double> xi_samples;
};

// Extrapolates s, r to xi -> 0+ from xi_min, 2 xi_min, 4 xi_min (quadratic
// Richardson). Throws NumericalError when |s| is not monotone on the samples.
EdgeValues edge_check(const GridPtr& grid, Potential potential, double xi_min = 0.02);
EdgeValues edge_check(const DistortedSpectrum& spectrum, double xi_min = 0.02);

// F_+(xi) = <f, sigma_3 e_+(., xi)>, F_-(xi) = <f, sigma_3 e_-(., xi)>.
struct DistortedCoefficients {
  std::vector<cplx> plus;
  std::vector<cplx> minus;
};

DistortedCoefficients distorted_transform(const VectorField& f, const DistortedSpectrum& spectrum);

// (1/2pi) int [ e_+ F_+ - e_- F_- ] dxi, which equals P_s f for F = transform(f).
VectorField inverse_distorted_transform(const DistortedCoefficients& c,
                                        const DistortedSpectrum& spectrum);

// Right-hand side of the Plancherel identity for <P_s phi, psi>:
// (1/2pi) int [ F_+(phi) conj<psi, e_+> - F_-(phi) conj<psi, e_-> ] dxi.
cplx distorted_pairing(const VectorField& phi, const VectorField& psi,
                       const DistortedSpectrum& spectrum);

// Smooth cutoff: 1 for |xi| <= pass, 0 for |xi| >= stop, C-infinity between.
double frequency_window(double xi, double pass, double stop);

// Frequency-localized dispersive datum: the inverse transform of
// frequency_window(xi) F_pm(g). It lies in the range of P_s and carries no
// content beyond |xi| = stop, so its group velocity is at most 2 stop.
VectorField band_limited_datum(const VectorField& g, const DistortedSpectrum& spectrum,
                               double pass, double stop);

// e^{itH} applied through the transform: multipliers e^{-it(1+xi^2)} on the
// e_+ branch and e^{+it(1+xi^2)} on the e_- branch.
VectorField evolve_by_transform(const VectorField& f, double t, const DistortedSpectrum& spectrum);

// Time stepping of g' = i H g.
//
// CrankNicolson solves (1 - i dt/2 H) g_{k+1} = (1 + i dt/2 H) g_k with GMRES,
// preconditioned by the free operator (diagonal in Fourier space). Its phase
// error grows like (1 + k^2)^3 dt^2, which matters for the slowly decaying
// Fourier tails that P_s inherits from the root modes.
//
// Split is the symmetric splitting H = H_0 + V: exact free half steps in
// Fourier space around the exact pointwise flow of the 2x2 potential matrix.
enum class LinearScheme { Split, CrankNicolson };

class LinearEvolver {
 public:
  struct Options {
    double dt = 0.01;
    LinearScheme scheme = LinearScheme::Split;
    // Combine runs at dt and dt/2 into a fourth-order result.
    bool richardson = false;
    double gmres_tolerance = 1e-12;
  };

  // Applied to the state after every step.
  using StepHook = std::function<void(VectorField&)>;

  LinearEvolver(HOperator H, Options options);
  LinearEvolver(HOperator H) : LinearEvolver(std::move(H), Options{}) {}

  // e^{itH} g. The step count is ceil(t / dt).
  VectorField evolve(const VectorField& g, double t, const StepHook& hook = {}) const;
  const HOperator& op() const { return H_; }
  const Options& options() const { return options_; }

 private:
  VectorField advance(const VectorField& g, double t, double dt, const StepHook& hook) const;
  VectorField advance_split(const VectorField& g, double t, double dt, const StepHook& hook) const;

  HOperator H_;
  Options options_;
};

// Context for e^{itH} P_s: the operator, its root basis (absent for the free
// operator, where P_s is the identity) and the time stepper. The state is
// re-projected after every step: the splitting error feeds the nilpotent
// root block, which would otherwise amplify it like t^3.
class DispersiveFlow {
 public:
  DispersiveFlow(const GridPtr& grid, Potential potential, LinearEvolver::Options options = {});

  VectorField project(const VectorField& f) const;
  // e^{itH} P_s f
  VectorField evolve(const VectorField& f, double t) const;
  // Evolves P_s f through the sorted times, returning one field per time.
  std::vector<VectorField> evolve_samples(const VectorField& f, std::span<const double> times) const;

  const LinearEvolver& evolver() const { return evolver_; }
  const std::optional<RootSpaceBasis>& basis() const { return basis_; }

 private:
  LinearEvolver::StepHook hook() const;

  std::optional<RootSpaceBasis> basis_;
  LinearEvolver evolver_;
};

// e^{itH} P_s f via the Crank-Nicolson path.
VectorField evolve_linear(double t, const VectorField& f, const DispersiveFlow& flow);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> times;
  std::vector<double> weighted_sup;
  double max_boundary_fraction = 0.0;
};

// Least-squares slope of log ||<x>^{-theta} e^{itH} P_s f||_inf against log t,
// <x> = |x| + 1. Throws NumericalError when the mass in |x| > 0.9 L exceeds
// 1e-6 of the total at any sample (periodic wraparound).
DecayFit decay_exponent_fit(const VectorField& f, double theta, std::span<const double> t_samples,
                            const DispersiveFlow& flow);
// Same fit on already evolved fields (fields[i] at times[i]).
DecayFit decay_fit_from_samples(std::span<const VectorField> fields, std::span<const double> times,
                                double theta);

}  // namespace qnls
