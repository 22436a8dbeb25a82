#include "qnls/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/interpolators/cardinal_quintic_b_spline.hpp>

#include "qnls/errors.hpp"
#include "qnls/spectral.hpp"

namespace qnls {
namespace {

constexpr cplx kI{0.0, 1.0};

// Which twisted modes are of the (i a, -i a) type; both families share the
// profile index.
constexpr std::array<bool, 6> kXiAnti{false, true, true, false, false, true};
constexpr std::array<bool, 6> kEtaAnti{true, false, false, true, true, false};

bool finite_params(const ModParams& p) {
  return std::isfinite(p.lambda) && std::isfinite(p.beta) && std::isfinite(p.mu) &&
         std::isfinite(p.omega) && std::isfinite(p.gamma);
}

double phase(const ModParams& p, double z) { return p.gamma + p.omega * z - 0.25 * p.beta * z * z; }

std::array<VectorField, 6> twisted_family(const ModParams& params, const ProfileSet& profiles,
                                          const GridPtr& grid, const std::array<bool, 6>& anti) {
  params.validate();
  std::array<VectorField, 6> out;
  for (auto& f : out) f = VectorField::zeros(grid);
  const double sl = std::sqrt(params.lambda);
  std::array<double, 6> a{}, da{};
  for (int j = 0; j < grid->size(); ++j) {
    const double z = params.lambda * (grid->node(j) - params.mu);
    profiles.evaluate(z, a, da);
    const cplx e = std::polar(1.0, phase(params, z));
    for (int i = 0; i < 6; ++i) {
      const cplx up = anti[i] ? kI * e : e;
      out[i].upper[j] = up * (sl * a[i]);
      out[i].lower[j] = std::conj(up) * (sl * a[i]);
    }
  }
  return out;
}

// Pairings <(R, conj R), xi_i(pi)> for all six modes (each real), with the
// Jacobian of modes 2..6 when requested.
struct PairingEval {
  std::array<double, 6> pairing{};
  Eigen::Matrix<double, 5, 5> jacobian = Eigen::Matrix<double, 5, 5>::Zero();
};

PairingEval evaluate_pairings(const ComplexField& psi, const ModParams& p, const ProfileSet& profiles,
                              bool with_jacobian) {
  const auto& grid = psi.grid();
  const double sl = std::sqrt(p.lambda);
  std::array<cplx, 6> X{};
  Eigen::Matrix<cplx, 5, 5> J = Eigen::Matrix<cplx, 5, 5>::Zero();
  std::array<double, 6> a{}, da{};
  std::array<double, 5> dpsi{};
  for (int j = 0; j < grid.size(); ++j) {
    const double xm = grid.node(j) - p.mu;
    const double z = p.lambda * xm;
    profiles.evaluate(z, a, da);
    if (a[0] == 0.0 && a[5] == 0.0 && a[4] == 0.0) continue;
    const cplx e = std::polar(1.0, phase(p, z));
    const cplx ec = std::conj(e);
    const cplx W = e * (sl * a[0]);
    const cplx R = psi[j] - W;
    for (int i = 0; i < 6; ++i) X[i] += R * ec * (sl * a[i]);
    if (!with_jacobian) continue;

    // Parameter derivatives of Psi (lambda, beta, mu, omega, gamma).
    const double q = p.omega - 0.5 * p.beta * z;
    dpsi = {q * xm, -0.25 * z * z, -p.lambda * q, z, 1.0};
    // d/dlambda and d/dmu of sqrt(lambda) f(z).
    auto amp_lambda = [&](int i) { return (0.5 * a[i] + z * da[i]) / sl; };
    auto amp_mu = [&](int i) { return -p.lambda * sl * da[i]; };
    std::array<cplx, 5> dW{};
    for (int k = 0; k < 5; ++k) dW[k] = W * (kI * dpsi[k]);
    dW[0] += e * amp_lambda(0);
    dW[2] += e * amp_mu(0);
    for (int i = 1; i < 6; ++i) {
      const cplx K = ec * (sl * a[i]);
      for (int k = 0; k < 5; ++k) {
        cplx dK = K * (-kI * dpsi[k]);
        if (k == 0) dK += ec * amp_lambda(i);
        if (k == 2) dK += ec * amp_mu(i);
        J(i - 1, k) += -dW[k] * K + R * dK;
      }
    }
  }
  const double h = grid.spacing();
  PairingEval out;
  for (int i = 0; i < 6; ++i) {
    const cplx v = 2.0 * h * X[i];
    out.pairing[i] = kXiAnti[i] ? v.imag() : v.real();
  }
  if (with_jacobian) {
    for (int i = 0; i < 5; ++i)
      for (int k = 0; k < 5; ++k) {
        const cplx v = 2.0 * h * J(i, k);
        out.jacobian(i, k) = kXiAnti[i + 1] ? v.imag() : v.real();
      }
  }
  return out;
}

std::array<double, 5> tail5(const std::array<double, 6>& v) { return {v[1], v[2], v[3], v[4], v[5]}; }

double norm5(const std::array<double, 5>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double unwrap_near(double value, double reference) {
  return reference + std::remainder(value - reference, 2.0 * std::numbers::pi);
}

// Fornberg weights for the first derivative at x0 from nodes xs.
std::vector<double> first_derivative_weights(double x0, const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(2, 0.0));
  double c1 = 1.0, c4 = xs[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][1];
  return w;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

}  // namespace

void ModParams::validate() const {
  if (!finite_params(*this) || !std::isfinite(t)) throw UsageError("modulation parameters must be finite");
  if (!(lambda > 0.0)) throw UsageError("modulation parameter lambda must be positive");
}

ModParams ModParams::from_array(const std::array<double, 5>& a, double t) {
  return {a[0], a[1], a[2], a[3], a[4], t};
}

ModParams exact_params(const ExactWaveParams& p, double t) {
  if (p.b == 0.0) throw UsageError("exact modulated wave needs b != 0");
  const double s = p.a + p.b * t;
  if (!(s > 0.0)) throw UsageError("exact modulated wave is singular at this time");
  ModParams m;
  m.lambda = 1.0 / s;
  m.beta = -p.b * s;
  m.omega = p.v * s;
  m.mu = 2.0 * t * p.v + p.mu0;
  m.gamma = -1.0 / (p.b * s) + p.v * p.v * t + p.v * p.mu0 + p.gamma;
  m.t = t;
  return m;
}

ComplexField build_W(const ModParams& params, const GridPtr& grid) {
  params.validate();
  const double sl = std::sqrt(params.lambda);
  return sample(grid, [&](double x) {
    const double z = params.lambda * (x - params.mu);
    return std::polar(sl * phi0(z), phase(params, z));
  });
}

struct ProfileSet::Splines {
  using Spline = boost::math::interpolators::cardinal_quintic_b_spline<double>;
  Spline rho;
  Spline rho_prime;
  double lo = 0.0;
  double hi = 0.0;
};

ProfileSet::ProfileSet(const RootSpaceBasis& basis)
    : basis_(std::make_shared<const RootSpaceBasis>(basis)), gram_(gram_table(basis)) {
  // Resample rho and rho' to a grid fine enough for quintic splines to stay
  // at roundoff level.
  const auto& g = *basis.grid;
  int fine_n = g.size();
  while (g.half_length() * 2.0 / fine_n > 0.005) fine_n *= 2;
  const GridPtr fine = make_grid(g.half_length(), fine_n);
  const ComplexField rho = resample(basis.rho, fine);
  const ComplexField drho = resample(spectral_derivative(basis.rho, 1), fine);
  std::vector<double> r(fine_n), dr(fine_n);
  for (int j = 0; j < fine_n; ++j) {
    r[j] = rho[j].real();
    dr[j] = drho[j].real();
  }
  const double h = fine->spacing();
  const double x0 = fine->node(0);
  splines_ = std::make_shared<const Splines>(Splines{
      Splines::Spline(r, x0, h, {0.0, 0.0}, {0.0, 0.0}),
      Splines::Spline(dr, x0, h, {0.0, 0.0}, {0.0, 0.0}), x0, fine->node(fine_n - 1)});
}

void ProfileSet::evaluate(double z, std::array<double, 6>& value, std::array<double, 6>& slope) const {
  const double p = phi0(z);
  const double dp = phi0_dx(z);
  const double ddp = phi0_dxx(z);
  value = {p, z * dp + 0.5 * p, dp, z * p, z * z * p, 0.0};
  slope = {dp, z * ddp + 1.5 * dp, ddp, p + z * dp, 2.0 * z * p + z * z * dp, 0.0};
  if (z >= splines_->lo && z <= splines_->hi) {
    value[5] = splines_->rho(z);
    slope[5] = splines_->rho_prime(z);
  }
}

std::array<VectorField, 6> build_xi_family(const ModParams& params, const ProfileSet& profiles,
                                           const GridPtr& grid) {
  return twisted_family(params, profiles, grid, kXiAnti);
}

std::array<VectorField, 6> build_eta_family(const ModParams& params, const ProfileSet& profiles,
                                            const GridPtr& grid) {
  return twisted_family(params, profiles, grid, kEtaAnti);
}

std::array<double, 5> orthogonality_conditions(const ComplexField& psi, const ModParams& params,
                                               const ProfileSet& profiles) {
  params.validate();
  return tail5(evaluate_pairings(psi, params, profiles, false).pairing);
}

Eigen::Matrix<double, 5, 5> orthogonality_jacobian(const ComplexField& psi, const ModParams& params,
                                                   const ProfileSet& profiles) {
  params.validate();
  return evaluate_pairings(psi, params, profiles, true).jacobian;
}

DecompositionResult decompose(const ComplexField& psi, double t, const ModParams& guess,
                              const ProfileSet& profiles, const DecompositionOptions& options) {
  guess.validate();
  psi.require_finite("decompose");
  const double scale = std::max(norm(psi), 1e-300);
  const double target = options.tolerance * scale;

  ModParams p = guess;
  p.t = t;
  PairingEval ev = evaluate_pairings(psi, p, profiles, true);
  double fnorm = norm5(tail5(ev.pairing));
  int it = 0;
  bool polished = false;
  double condition = 0.0;
  for (; it < options.max_iterations; ++it) {
    if (fnorm < target) {
      if (polished || fnorm == 0.0) break;
      polished = true;
    }
    Eigen::Matrix<double, 5, 1> F;
    for (int i = 0; i < 5; ++i) F(i) = ev.pairing[i + 1];
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(ev.jacobian));
    const auto& sv = svd.singularValues();
    condition = sv(4) > 0.0 ? sv(0) / sv(4) : INFINITY;
    const Eigen::Matrix<double, 5, 1> delta = -ev.jacobian.fullPivLu().solve(F);
    if (!delta.allFinite()) throw NumericalError("decompose: singular Jacobian");

    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
      auto a = p.as_array();
      for (int k = 0; k < 5; ++k) a[k] += step * delta(k);
      ModParams trial = ModParams::from_array(a, t);
      if (!(trial.lambda > 0.0) || !finite_params(trial)) continue;
      PairingEval tev = evaluate_pairings(psi, trial, profiles, true);
      const double tn = norm5(tail5(tev.pairing));
      if (tn < fnorm) {
        p = trial;
        ev = tev;
        fnorm = tn;
        accepted = true;
        break;
      }
    }
    if (p.lambda < options.lambda_min || p.lambda > options.lambda_max)
      throw NumericalError("decompose: lambda left the admissible range");
    if (!accepted) {
      if (fnorm < target) break;
      throw NumericalError("decompose: Newton divergence (guess outside the basin)");
    }
  }
  if (!(fnorm < target)) throw NumericalError("decompose: Newton did not converge");
  p.gamma = unwrap_near(p.gamma, guess.gamma);

  DecompositionResult out;
  out.params = p;
  out.iterations = it;
  out.jacobian_condition = condition;
  out.residuals = tail5(ev.pairing);
  out.R = psi - build_W(p, psi.grid_ptr());
  RootCoefficients pairings{};
  for (int i = 0; i < 6; ++i) pairings[i] = ev.pairing[i];
  out.root_coeffs = coefficients_from_pairings(profiles.gram(), pairings);
  const auto eta = build_eta_family(p, profiles, psi.grid_ptr());
  out.dispersive = VectorField::from_scalar(out.R);
  for (int i = 0; i < 6; ++i) out.dispersive -= out.root_coeffs[i] * eta[i];
  return out;
}

namespace {

// Advances pi along the modulation equations of the unperturbed ansatz
// (RK4); used as the Newton guess at the next snapshot.
ModParams predict(const ModParams& p, double t) {
  using State = std::array<double, 5>;
  auto rhs = [](const State& s) {
    const double l2 = s[0] * s[0];
    return State{s[1] * l2 * s[0], -l2 * s[1] * s[1], 2.0 * s[0] * s[3], -s[1] * l2 * s[3],
                 l2 * (1.0 + s[3] * s[3])};
  };
  State s = p.as_array();
  const int substeps = 32;
  const double h = (t - p.t) / substeps;
  for (int k = 0; k < substeps; ++k) {
    const State k1 = rhs(s);
    State y;
    for (int c = 0; c < 5; ++c) y[c] = s[c] + 0.5 * h * k1[c];
    const State k2 = rhs(y);
    for (int c = 0; c < 5; ++c) y[c] = s[c] + 0.5 * h * k2[c];
    const State k3 = rhs(y);
    for (int c = 0; c < 5; ++c) y[c] = s[c] + h * k3[c];
    const State k4 = rhs(y);
    for (int c = 0; c < 5; ++c) s[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
  }
  for (double v : s)
    if (!std::isfinite(v)) return p;
  if (s[0] <= 0.0) return p;
  ModParams out = ModParams::from_array(s, t);
  return out;
}

}  // namespace

std::vector<TrackPoint> track(const Trajectory& traj, const ModParams& first_guess,
                              const ProfileSet& profiles, const DecompositionOptions& options) {
  std::vector<TrackPoint> out;
  out.reserve(traj.times.size());
  ModParams guess = first_guess;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    TrackPoint tp;
    tp.t = traj.times[i];
    try {
      const ModParams predicted = i == 0 ? guess : predict(guess, tp.t);
      tp.result = decompose(traj.snapshots[i], tp.t, predicted, profiles, options);
      const double jump = tp.result->params.lambda / predicted.lambda;
      if (jump > 2.0 || jump < 0.5)
        throw NumericalError("decompose: converged to a distant branch (lambda " +
                             std::to_string(tp.result->params.lambda) + ")");
      guess = tp.result->params;
    } catch (const NumericalError& e) {
      tp.result.reset();
      tp.error = e.what();
    }
    out.push_back(std::move(tp));
  }
  return out;
}

std::vector<ConsistencyPoint> consistency_residuals(const std::vector<TrackPoint>& series) {
  std::vector<ConsistencyPoint> out;
  std::size_t i = 0;
  while (i < series.size()) {
    if (!series[i].result) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < series.size() && series[end].result) ++end;
    const std::size_t len = end - i;
    if (len >= 3) {
      std::vector<double> ts;
      std::vector<std::array<double, 5>> ps;
      for (std::size_t k = i; k < end; ++k) {
        ts.push_back(series[k].t);
        ps.push_back(series[k].result->params.as_array());
      }
      for (std::size_t k = 1; k < len; ++k) ps[k][4] = unwrap_near(ps[k][4], ps[k - 1][4]);
      const int width = len >= 5 ? 5 : 3;
      for (std::size_t k = 0; k < len; ++k) {
        const int first = static_cast<int>(std::clamp<long>(static_cast<long>(k) - width / 2, 0,
                                                            static_cast<long>(len) - width));
        std::vector<double> xs(ts.begin() + first, ts.begin() + first + width);
        const auto w = first_derivative_weights(ts[k], xs);
        std::array<double, 5> d{};
        for (int m = 0; m < width; ++m)
          for (int c = 0; c < 5; ++c) d[c] += w[m] * ps[first + m][c];
        const double lam = ps[k][0], beta = ps[k][1], omega = ps[k][3];
        const double l2 = lam * lam;
        ConsistencyPoint cp;
        cp.t = ts[k];
        cp.lambda = lam;
        cp.residuals = {d[0] / lam - beta * l2, d[1] + l2 * beta * beta, d[2] - 2.0 * lam * omega,
                        d[3] + beta * l2 * omega, d[4] - l2 - l2 * omega * omega};
        out.push_back(cp);
      }
    }
    i = end;
  }
  if (out.empty())
    throw NumericalError("consistency_residuals: gaps too wide (need 3 consecutive successes)");
  return out;
}

std::string to_string(RateClass c) {
  return c == RateClass::Nongeneric ? "NONGENERIC" : "UNDETERMINED";
}

RateReport classify_rate(const std::vector<double>& times, const std::vector<double>& lambdas,
                         double T_est) {
  if (times.size() != lambdas.size()) throw UsageError("classify_rate: size mismatch");
  if (times.size() < 20) throw UsageError("classify_rate: need at least 20 points");
  for (double l : lambdas)
    if (!(l > 0.0) || !std::isfinite(l)) throw UsageError("classify_rate: lambda must be positive");
  const auto [mn, mx] = std::minmax_element(lambdas.begin(), lambdas.end());
  RateReport rep;
  rep.points = static_cast<int>(times.size());
  rep.T_reference = T_est;
  rep.dynamic_range = *mx / *mn;
  if (std::log10(rep.dynamic_range) < 0.99)
    throw NumericalError("classify_rate: insufficient dynamic range");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1]) || !(lambdas[i] > lambdas[i - 1]))
      throw UsageError("classify_rate: lambda must increase along increasing times");
  }

  // lambda = c (T - t)^{-p}: 1/lambda^{1/p} is linear in t.
  auto fit_model = [&](double p, double& c, double& T) -> double {
    std::vector<double> y(lambdas.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::pow(lambdas[i], -1.0 / p);
    const LineFit f = fit_line(times, y);
    if (!(f.slope < 0.0)) return INFINITY;
    T = -f.intercept / f.slope;
    c = std::pow(-1.0 / f.slope, p);
    double ss = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double gap = T - times[i];
      if (!(gap > 0.0)) return INFINITY;
      const double r = std::log(lambdas[i]) - (std::log(c) - p * std::log(gap));
      ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(times.size()));
  };
  rep.residual_inverse = fit_model(1.0, rep.c_inverse, rep.T_inverse);
  rep.residual_sqrt = fit_model(0.5, rep.c_sqrt, rep.T_sqrt);
  rep.verdict = rep.residual_inverse < 0.25 * rep.residual_sqrt ? RateClass::Nongeneric
                                                                 : RateClass::Undetermined;
  return rep;
}

}  // namespace qnls
