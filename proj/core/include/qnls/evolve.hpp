#pragma once

#include <limits>
#include <string>
#include <vector>

#include "qnls/grid.hpp"

namespace qnls {

// One Strang step for i psi_t + psi_xx = -|psi|^4 psi: half linear step in
// Fourier space, exact nonlinear phase rotation, half linear step.
ComplexField split_step(const ComplexField& psi, double dt);

struct SolverConfig {
  double dt0 = 1e-3;
  // dt = dt0 / (1 + ||psi||_inf^4 / ||psi_0||_inf^4) when set, dt0 otherwise.
  bool adaptive = true;
  double t_end = 1.0;
  // Snapshots at t = 0, every snapshot_interval, and at the final time.
  double snapshot_interval = 0.01;
  // Guards.
  double sup_threshold = std::numeric_limits<double>::infinity();
  double dt_min = 1e-12;
  double boundary_fraction = 1e-8;  // mass fraction allowed in |x| > 0.9 L
  double tail_fraction = 1e-20;     // spectral power allowed above 2/3 k_max
  long max_steps = 100'000'000;

  // Throws UsageError for non-positive steps, intervals or thresholds.
  void validate() const;
};

enum class StopReason { Completed, SupThreshold, DtUnderflow, NonFinite, Wraparound, Underresolved };

std::string to_string(StopReason r);
// Guard stops that signal a broken run rather than an approached blow-up.
// Exhausting the grid resolution is the expected end of a blow-up run on a
// fixed grid and is not a failure.
bool is_failure(StopReason r);

struct Diagnostics {
  double mass = 0.0;
  double energy = 0.0;
  double sup = 0.0;
  double h1 = 0.0;
  double pconf = 0.0;         // ||(x + 2it d_x) psi||^2
  double pconf_energy = 0.0;  // pconf - (4 t^2 / 3) int |psi|^6, conserved
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ComplexField> snapshots;
  std::vector<Diagnostics> diagnostics;
  StopReason stop = StopReason::Completed;
  std::string stop_message;
  double t_stop = 0.0;
  long steps = 0;
};

// Integrates to config.t_end or until a guard fires. Deterministic.
Trajectory run(const ComplexField& psi0, const SolverConfig& config);

double mass(const ComplexField& psi);
// (1/2) int |psi_x|^2 - (1/6) int |psi|^6
double energy(const ComplexField& psi);
double h1_norm(const ComplexField& psi);
// ||(x + 2 i t d_x) psi||^2
double pconf_norm(const ComplexField& psi, double t);
// pconf_norm - (4 t^2 / 3) int |psi|^6; equals ||x psi(0)||^2 along solutions.
double pconf_energy(const ComplexField& psi, double t);
Diagnostics diagnose(const ComplexField& psi, double t);

// max_x | 2 i s d_x|U|^2 - [ (C U) conj(U) - U conj(C U) ] |, C = x + 2 i s d_x.
double null_form_check(const ComplexField& U, double s);

struct BlowupFitOptions {
  // The fit window starts where sup|psi| first exceeds amplification * sup|psi_0|.
  double amplification = 2.0;
  int min_points = 20;
};

struct BlowupFit {
  double T_est = 0.0;
  double c = 0.0;  // 1/sup^2 ~ c (T - t)
  double residual = 0.0;
  double t_first = 0.0;  // fit window
  double t_last = 0.0;
  int points = 0;
  // (max - min) / max of ||psi||_{H^1} (T_est - t) over the window.
  double h1_rate_spread = 0.0;
};

// Linear regression of 1/sup^2 against t on the tail. Throws NumericalError
// "non-monotone tail" when sup|psi| does not grow strictly over the window.
BlowupFit blowup_time_fit(const Trajectory& traj, const BlowupFitOptions& options = {});

}  // namespace qnls
