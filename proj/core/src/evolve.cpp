#include "qnls/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "qnls/errors.hpp"
#include "qnls/fft.hpp"
#include "qnls/spectral.hpp"

namespace qnls {
namespace {

constexpr cplx kI{0.0, 1.0};

// Strang steps on raw samples. Linear sub-steps of duration tau multiply the
// transform by exp(-i k^2 tau); multipliers are cached per tau.
class Stepper {
 public:
  explicit Stepper(const GridPtr& grid) : grid_(grid), spec_(grid->size()) {}

  // Both sub-flows conserve the discrete L2 norm exactly; FFT roundoff does
  // not, and its bias accumulates (about 1e-16 per step). When a reference
  // norm is set, deviations of roundoff size (< 1e-10 relative) are projected
  // out after every linear sub-step; larger ones are left visible.
  void set_reference_norm(const std::vector<cplx>& psi) { reference_ = sum_sq(psi); }

  void linear(std::vector<cplx>& psi, double tau) {
    const auto& mult = multiplier(tau);
    fft::forward(psi, spec_);
    for (std::size_t m = 0; m < spec_.size(); ++m) spec_[m] *= mult[m];
    fft::inverse(spec_, psi);
    if (reference_ > 0.0) {
      const long double now = sum_sq(psi);
      const long double ratio = reference_ / now;
      if (std::abs(static_cast<double>(ratio - 1.0L)) < 1e-10) {
        const double scale = static_cast<double>(std::sqrt(ratio));
        for (auto& z : psi) z *= scale;
      }
    }
  }

  // Exact nonlinear flow; returns sup |psi|, which it leaves unchanged.
  static double nonlinear(std::vector<cplx>& psi, double dt) {
    double sup2 = 0.0;
    for (auto& z : psi) {
      const double a2 = std::norm(z);
      sup2 = std::max(sup2, a2);
      z *= std::polar(1.0, a2 * a2 * dt);
    }
    return std::sqrt(sup2);
  }

  void step(std::vector<cplx>& psi, double dt) {
    linear(psi, 0.5 * dt);
    nonlinear(psi, dt);
    linear(psi, 0.5 * dt);
  }

 private:
  static long double sum_sq(const std::vector<cplx>& v) {
    long double s = 0.0L;
    for (const auto& z : v) s += static_cast<long double>(std::norm(z));
    return s;
  }

  const std::vector<cplx>& multiplier(double tau) {
    if (auto it = cache_.find(tau); it != cache_.end()) return it->second;
    if (cache_.size() > 64) cache_.clear();
    const auto k = grid_->wavenumbers();
    std::vector<cplx> mult(k.size());
    for (std::size_t m = 0; m < k.size(); ++m) mult[m] = std::polar(1.0, -k[m] * k[m] * tau);
    return cache_.emplace(tau, std::move(mult)).first->second;
  }

  GridPtr grid_;
  std::vector<cplx> spec_;
  std::map<double, std::vector<cplx>> cache_;
  long double reference_ = 0.0L;
};

// Adaptive steps are rounded down to the ladder dt0 * 2^{-j/16} so that the
// linear multipliers repeat.
double ladder_step(double dt0, double ratio) {
  const double raw = dt0 / (1.0 + ratio * ratio * ratio * ratio);
  const double j = std::ceil(-16.0 * std::log2(raw / dt0) - 1e-9);
  return dt0 * std::exp2(-std::max(j, 0.0) / 16.0);
}

double sup_of(const std::vector<cplx>& v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

double sixth_integral(const ComplexField& psi) {
  double s = 0.0;
  for (const auto& z : psi.values()) {
    const double a2 = std::norm(z);
    s += a2 * a2 * a2;
  }
  return s * psi.grid().spacing();
}

double boundary_fraction(const ComplexField& psi) {
  const auto& g = psi.grid();
  const double edge = 0.9 * g.half_length();
  double outer = 0.0, total = 0.0;
  for (int j = 0; j < g.size(); ++j) {
    const double w = std::norm(psi[j]);
    total += w;
    if (std::abs(g.node(j)) > edge) outer += w;
  }
  return total > 0.0 ? outer / total : 0.0;
}

double spectral_tail_fraction(const ComplexField& psi) {
  const auto spec = forward_transform(psi);
  const auto k = psi.grid().wavenumbers();
  const double cut = (2.0 / 3.0) * psi.grid().max_wavenumber();
  double outer = 0.0, total = 0.0;
  for (std::size_t m = 0; m < spec.size(); ++m) {
    const double w = std::norm(spec[m]);
    total += w;
    if (std::abs(k[m]) > cut) outer += w;
  }
  return total > 0.0 ? outer / total : 0.0;
}

}  // namespace

ComplexField split_step(const ComplexField& psi, double dt) {
  if (!(dt > 0.0)) throw UsageError("split_step: dt must be positive");
  ComplexField out = psi;
  Stepper(psi.grid_ptr()).step(out.data(), dt);
  out.require_finite("split_step");
  return out;
}

void SolverConfig::validate() const {
  if (!(dt0 > 0.0)) throw UsageError("solver: dt0 must be positive");
  if (!(t_end > 0.0)) throw UsageError("solver: t_end must be positive");
  if (!(snapshot_interval > 0.0)) throw UsageError("solver: snapshot_interval must be positive");
  if (!(sup_threshold > 0.0) || !(dt_min > 0.0) || !(boundary_fraction > 0.0) ||
      !(tail_fraction > 0.0))
    throw UsageError("solver: guard thresholds must be positive");
  if (max_steps <= 0) throw UsageError("solver: max_steps must be positive");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Completed: return "completed";
    case StopReason::SupThreshold: return "sup-threshold";
    case StopReason::DtUnderflow: return "dt-underflow";
    case StopReason::NonFinite: return "non-finite";
    case StopReason::Wraparound: return "wraparound";
    case StopReason::Underresolved: return "under-resolved";
  }
  return "unknown";
}

bool is_failure(StopReason r) {
  return r == StopReason::NonFinite || r == StopReason::Wraparound;
}

double mass(const ComplexField& psi) { return norm_sq(psi); }

double energy(const ComplexField& psi) {
  return 0.5 * norm_sq(spectral_derivative(psi, 1)) - sixth_integral(psi) / 6.0;
}

double h1_norm(const ComplexField& psi) {
  return std::sqrt(norm_sq(psi) + norm_sq(spectral_derivative(psi, 1)));
}

double pconf_norm(const ComplexField& psi, double t) {
  ComplexField c = multiply_by_x(psi);
  if (t != 0.0) c += (2.0 * t * kI) * spectral_derivative(psi, 1);
  return norm_sq(c);
}

double pconf_energy(const ComplexField& psi, double t) {
  return pconf_norm(psi, t) - (4.0 * t * t / 3.0) * sixth_integral(psi);
}

Diagnostics diagnose(const ComplexField& psi, double t) {
  const ComplexField dx = spectral_derivative(psi, 1);
  const double m = norm_sq(psi);
  const double kin = norm_sq(dx);
  const double six = sixth_integral(psi);
  ComplexField c = multiply_by_x(psi);
  c += (2.0 * t * kI) * dx;
  Diagnostics d;
  d.mass = m;
  d.energy = 0.5 * kin - six / 6.0;
  d.sup = max_abs(psi);
  d.h1 = std::sqrt(m + kin);
  d.pconf = norm_sq(c);
  d.pconf_energy = d.pconf - (4.0 * t * t / 3.0) * six;
  return d;
}

Trajectory run(const ComplexField& psi0, const SolverConfig& config) {
  config.validate();
  psi0.require_finite("run: initial data");
  const GridPtr grid = psi0.grid_ptr();

  Trajectory traj;
  auto record = [&](const ComplexField& f, double t) {
    traj.times.push_back(t);
    traj.snapshots.push_back(f);
    traj.diagnostics.push_back(diagnose(f, t));
  };
  auto stop = [&](StopReason r, double t, const std::string& msg) {
    traj.stop = r;
    traj.t_stop = t;
    traj.stop_message = msg;
  };

  ComplexField psi = psi0;
  record(psi, 0.0);
  const double sup0 = max_abs(psi0);
  if (sup0 == 0.0) {
    record(psi, config.t_end);
    traj.t_stop = config.t_end;
    traj.stop_message = "zero data";
    return traj;
  }

  // Consecutive half steps of the linear flow are fused, so the state is only
  // synchronized (all sub-flows complete) at snapshot times and guard stops.
  // The step size is chosen from sup|psi| at the start of a step or, inside a
  // fused sequence, at its midpoint (the nonlinear flow preserves |psi|).
  Stepper stepper(grid);
  auto& v = psi.data();
  stepper.set_reference_norm(v);
  const double eps_t = 1e-12 * config.t_end;
  double t = 0.0;
  long snap_index = 1;
  double dt = 0.0;
  bool synced = true;

  // Returns the next step, or a negative value after a guard stop.
  auto choose = [&](double sup) {
    if (!std::isfinite(sup)) {
      stop(StopReason::NonFinite, t, "non-finite state at t = " + std::to_string(t));
      return -1.0;
    }
    if (sup > config.sup_threshold) {
      stop(StopReason::SupThreshold, t, "blow-up approached, t_stop = " + std::to_string(t));
      return -1.0;
    }
    const double step = config.adaptive ? ladder_step(config.dt0, sup / sup0) : config.dt0;
    if (step < config.dt_min) {
      stop(StopReason::DtUnderflow, t, "blow-up approached, t_stop = " + std::to_string(t));
      return -1.0;
    }
    if (traj.steps >= config.max_steps) {
      stop(StopReason::DtUnderflow, t, "step budget exhausted, t_stop = " + std::to_string(t));
      return -1.0;
    }
    const double t_snap = std::min(config.t_end, snap_index * config.snapshot_interval);
    return t + step >= t_snap - eps_t ? t_snap - t : step;
  };

  while (t < config.t_end - eps_t) {
    if (synced) {
      dt = choose(sup_of(v));
      if (dt < 0.0) break;
      stepper.linear(v, 0.5 * dt);
      synced = false;
    }
    const double sup_mid = Stepper::nonlinear(v, dt);
    ++traj.steps;
    const double t_snap = std::min(config.t_end, snap_index * config.snapshot_interval);
    const bool at_snapshot = t + dt >= t_snap - eps_t;
    t = at_snapshot ? t_snap : t + dt;
    if (!at_snapshot) {
      const double next = choose(sup_mid);
      if (next < 0.0) {
        stepper.linear(v, 0.5 * dt);
        synced = true;
        break;
      }
      stepper.linear(v, 0.5 * (dt + next));
      dt = next;
      continue;
    }
    stepper.linear(v, 0.5 * dt);
    synced = true;
    ++snap_index;
    if (!psi.is_finite()) {
      stop(StopReason::NonFinite, t, "non-finite state at t = " + std::to_string(t));
      break;
    }
    const double bf = boundary_fraction(psi);
    if (bf > config.boundary_fraction) {
      std::ostringstream os;
      os << "wraparound: boundary mass fraction " << bf << " at t = " << t;
      stop(StopReason::Wraparound, t, os.str());
      break;
    }
    const double tf = spectral_tail_fraction(psi);
    if (tf > config.tail_fraction) {
      std::ostringstream os;
      os << "under-resolved: spectral tail fraction " << tf << " at t = " << t;
      stop(StopReason::Underresolved, t, os.str());
      break;
    }
    record(psi, t);
  }
  if (traj.stop == StopReason::Completed) {
    traj.t_stop = traj.times.back();
  } else if (traj.times.back() < t) {
    // Keep the last state reached before the guard fired when it is usable.
    if (psi.is_finite() && !is_failure(traj.stop)) record(psi, t);
  }
  return traj;
}

double null_form_check(const ComplexField& U, double s) {
  const ComplexField dU = spectral_derivative(U, 1);
  ComplexField dens(U.grid_ptr());
  for (int j = 0; j < U.size(); ++j) dens[j] = std::norm(U[j]);
  const ComplexField ddens = spectral_derivative(dens, 1);
  const auto& g = U.grid();
  double worst = 0.0;
  for (int j = 0; j < U.size(); ++j) {
    const cplx cu = g.node(j) * U[j] + 2.0 * kI * s * dU[j];
    const cplx lhs = 2.0 * kI * s * ddens[j];
    const cplx rhs = cu * std::conj(U[j]) - U[j] * std::conj(cu);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

BlowupFit blowup_time_fit(const Trajectory& traj, const BlowupFitOptions& options) {
  const std::size_t n = traj.times.size();
  if (options.min_points < 3) throw UsageError("blowup_time_fit: min_points must be >= 3");
  if (n < static_cast<std::size_t>(options.min_points))
    throw NumericalError("blowup_time_fit: non-monotone tail (too few snapshots)");
  const double sup0 = traj.diagnostics.front().sup;
  std::size_t first = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (traj.diagnostics[i].sup >= options.amplification * sup0) {
      first = i;
      break;
    }
  }
  first = std::min(first, n - static_cast<std::size_t>(options.min_points));
  for (std::size_t i = first + 1; i < n; ++i) {
    if (!(traj.diagnostics[i].sup > traj.diagnostics[i - 1].sup))
      throw NumericalError("blowup_time_fit: non-monotone tail");
  }
  // The relative growth must exceed what roundoff could produce.
  if (traj.diagnostics.back().sup < (1.0 + 1e-6) * traj.diagnostics[first].sup)
    throw NumericalError("blowup_time_fit: non-monotone tail");

  const std::size_t m = n - first;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = first; i < n; ++i) {
    const double t = traj.times[i];
    const double y = 1.0 / (traj.diagnostics[i].sup * traj.diagnostics[i].sup);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double md = static_cast<double>(m);
  const double slope = (md * sty - st * sy) / (md * stt - st * st);
  const double icpt = (sy - slope * st) / md;
  if (!(slope < 0.0)) throw NumericalError("blowup_time_fit: non-monotone tail");

  BlowupFit fit;
  fit.c = -slope;
  fit.T_est = -icpt / slope;
  fit.points = static_cast<int>(m);
  fit.t_first = traj.times[first];
  fit.t_last = traj.times.back();
  double res = 0.0, hmin = INFINITY, hmax = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const double t = traj.times[i];
    const double y = 1.0 / (traj.diagnostics[i].sup * traj.diagnostics[i].sup);
    res += std::pow(y - (icpt + slope * t), 2);
    const double h = traj.diagnostics[i].h1 * (fit.T_est - t);
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
  }
  fit.residual = std::sqrt(res / md);
  fit.h1_rate_spread = hmax > 0.0 ? (hmax - hmin) / hmax : 0.0;
  return fit;
}

}  // namespace qnls
