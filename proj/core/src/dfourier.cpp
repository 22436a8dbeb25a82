#include "qnls/dfourier.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <thread>

#include "qnls/errors.hpp"
#include "qnls/krylov.hpp"
#include "qnls/soliton.hpp"
#include "qnls/spectral.hpp"

namespace qnls {
namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;
using CMat = Eigen::MatrixXcd;
constexpr cplx kI{0.0, 1.0};

// Column layout of a 4-state: (osc, dec, osc', dec').
struct JostSystem {
  double xi2;
  bool free;

  void operator()(const State& y, State& dy, double x) const {
    const double q = free ? 0.0 : std::pow(phi0(x), 4);
    const double a = -xi2 - 3.0 * q;       // osc'' = a osc - 2q dec
    const double c = 2.0 + xi2 - 3.0 * q;  // dec'' = c dec - 2q osc
    for (std::size_t o = 0; o < y.size(); o += 8) {
      for (int p = 0; p < 2; ++p) {
        dy[o + p] = y[o + 4 + p];
        dy[o + 2 + p] = y[o + 6 + p];
        dy[o + 4 + p] = a * y[o + p] - 2.0 * q * y[o + 2 + p];
        dy[o + 6 + p] = c * y[o + 2 + p] - 2.0 * q * y[o + p];
      }
    }
  }
};

State pack(const CMat& m) {
  State s(static_cast<std::size_t>(8 * m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (int r = 0; r < 4; ++r) {
      s[8 * c + 2 * r] = m(r, c).real();
      s[8 * c + 2 * r + 1] = m(r, c).imag();
    }
  return s;
}

CMat unpack(const State& s, Eigen::Index cols) {
  CMat m(4, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (int r = 0; r < 4; ++r) m(r, c) = {s[8 * c + 2 * r], s[8 * c + 2 * r + 1]};
  return m;
}

// Orthonormal Q and upper-triangular R with Q R = b.
void thin_qr(const CMat& b, CMat& q, CMat& r) {
  Eigen::HouseholderQR<CMat> qr(b);
  const auto m = b.cols();
  q = qr.householderQ() * CMat::Identity(4, m);
  r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
}

// Inward sweep from the outer match node to the origin on one side. Columns
// are kept orthonormal at every node (the decaying mode first) so the
// oscillatory columns never drown in the mode that grows inward.
struct Sweep {
  std::vector<int> nodes;  // outer -> origin
  std::vector<CMat> q;
  std::vector<CMat> r;  // c_{k-1} = R_k^{-1} c_k; R_0 maps to the asymptotic basis

  // Maps origin coefficients to coefficients in the asymptotic basis.
  CMat to_asymptotic_matrix() const {
    const auto m = q.front().cols();
    CMat acc = CMat::Identity(m, m);
    for (std::size_t k = r.size(); k-- > 0;) acc = r[k].triangularView<Eigen::Upper>().solve(acc);
    return acc;
  }
};

Sweep sweep(const Grid1D& grid, int outer, int origin, const CMat& initial, const JostSystem& sys,
            double tol) {
  Sweep sw;
  const int step = outer < origin ? 1 : -1;
  for (int j = outer;; j += step) {
    sw.nodes.push_back(j);
    if (j == origin) break;
  }
  CMat q, r;
  thin_qr(initial, q, r);
  sw.q.push_back(q);
  sw.r.push_back(r);
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
  const double h = grid.spacing();
  for (std::size_t k = 1; k < sw.nodes.size(); ++k) {
    State y = pack(q);
    const double x0 = grid.node(sw.nodes[k - 1]);
    const double x1 = grid.node(sw.nodes[k]);
    odeint::integrate_adaptive(stepper, sys, y, x0, x1, 0.25 * h * (x1 > x0 ? 1.0 : -1.0));
    for (double v : y)
      if (!std::isfinite(v)) throw NumericalError("Jost integration produced non-finite values");
    thin_qr(unpack(y, q.cols()), q, r);
    sw.q.push_back(q);
    sw.r.push_back(r);
  }
  return sw;
}

}  // namespace

ScatteringPoint jost_solve(double xi, const GridPtr& grid, const JostOptions& options) {
  if (xi == 0.0 || !std::isfinite(xi)) throw UsageError("jost_solve needs a finite xi != 0");
  const Grid1D& g = *grid;
  const int n = g.size();
  const int origin = g.origin_index();
  const double h = g.spacing();
  const double reach = std::min(options.match_half_width, 0.9 * g.half_length());
  const int m_off = static_cast<int>(std::floor(reach / h + 1e-9));
  if (m_off < 2) throw UsageError("grid too coarse for the Jost solver");
  const int right = origin + m_off;
  const int left = origin - m_off;
  const double X = m_off * h;

  const double xi2 = xi * xi;
  const double kappa = std::sqrt(2.0 + xi2);
  const JostSystem sys{xi2, options.potential == Potential::Free};

  auto osc_col = [&](double x, double k) {
    CMat c = CMat::Zero(4, 1);
    const cplx e = std::polar(1.0, k * x);
    c(0, 0) = e;
    c(2, 0) = kI * k * e;
    return c;
  };
  // Decaying mode normalized to 1 at the match node of side sigma.
  auto dec_col = [&](int sigma) {
    CMat c = CMat::Zero(4, 1);
    c(1, 0) = 1.0;
    c(3, 0) = -sigma * kappa;
    return c;
  };

  // Transmitted side carries (dec, e^{i xi x}); incident side carries
  // (dec, e^{i xi x}, e^{-i xi x}).
  const int t_sigma = xi > 0 ? 1 : -1;
  const int i_sigma = -t_sigma;
  const int t_outer = t_sigma > 0 ? right : left;
  const int i_outer = i_sigma > 0 ? right : left;
  const double t_x = t_sigma * X;
  const double i_x = i_sigma * X;

  CMat t_init(4, 2), i_init(4, 3);
  t_init << dec_col(t_sigma), osc_col(t_x, xi);
  i_init << dec_col(i_sigma), osc_col(i_x, xi), osc_col(i_x, -xi);

  const Sweep ts = sweep(g, t_outer, origin, t_init, sys, options.tolerance);
  const Sweep is = sweep(g, i_outer, origin, i_init, sys, options.tolerance);

  // Q_t a - Q_i b = 0 at the origin, incident amplitude fixed to one.
  const CMat mt = ts.to_asymptotic_matrix();
  const CMat mi = is.to_asymptotic_matrix();
  Eigen::Matrix<cplx, 5, 5> sys_mat = Eigen::Matrix<cplx, 5, 5>::Zero();
  sys_mat.topLeftCorner(4, 2) = ts.q.back();
  sys_mat.topRightCorner(4, 3) = -is.q.back();
  sys_mat.block(4, 2, 1, 3) = mi.row(1);
  Eigen::Matrix<cplx, 5, 1> rhs = Eigen::Matrix<cplx, 5, 1>::Zero();
  rhs(4) = 1.0;
  const Eigen::FullPivLU<Eigen::Matrix<cplx, 5, 5>> lu(sys_mat);
  if (!lu.isInvertible()) throw NumericalError("Jost matching system is singular");
  const Eigen::Matrix<cplx, 5, 1> sol = lu.solve(rhs);
  const Eigen::VectorXcd a = sol.head(2);
  const Eigen::VectorXcd b = sol.tail(3);

  ScatteringPoint p;
  p.xi = xi;
  const Eigen::VectorXcd ta = mt * a;
  const Eigen::VectorXcd ib = mi * b;
  p.s_coef = ta(1);
  p.r_coef = ib(2);

  std::vector<cplx> osc(static_cast<std::size_t>(n)), dec(static_cast<std::size_t>(n));
  std::vector<double> flux(static_cast<std::size_t>(n), 0.0);
  auto fill_side = [&](const Sweep& sw, Eigen::VectorXcd c) {
    for (std::size_t k = sw.nodes.size(); k-- > 0;) {
      const Eigen::VectorXcd y = sw.q[k] * c;
      const auto j = static_cast<std::size_t>(sw.nodes[k]);
      osc[j] = y(0);
      dec[j] = y(1);
      flux[j] = (std::conj(y(0)) * y(2) + std::conj(y(1)) * y(3)).imag();
      c = sw.r[k].triangularView<Eigen::Upper>().solve(c);
    }
  };
  fill_side(ts, a);
  fill_side(is, b);

  // Closed-form free solutions outside the match window.
  for (int j = 0; j < n; ++j) {
    if (j >= left && j <= right) continue;
    const double x = g.node(j);
    const double decay = std::exp(-kappa * (std::abs(x) - X));
    const bool transmitted = (x > 0) == (t_sigma > 0);
    if (transmitted) {
      osc[j] = ta(1) * std::polar(1.0, xi * x);
      dec[j] = ta(0) * decay;
    } else {
      osc[j] = ib(1) * std::polar(1.0, xi * x) + ib(2) * std::polar(1.0, -xi * x);
      dec[j] = ib(0) * decay;
    }
  }

  double scale = 0.0;
  for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(osc[j]));
  const double edge = std::max(std::abs(dec[0]), std::abs(dec[static_cast<std::size_t>(n - 1)]));
  if (!(edge <= 1e-6 * std::max(scale, 1.0)))
    throw NumericalError("growing-mode contamination in the decaying channel at the boundary");

  const double j0 = flux[static_cast<std::size_t>(origin)];
  for (int j = left; j <= right; ++j)
    p.wronskian_drift = std::max(p.wronskian_drift, std::abs(flux[j] - j0) / std::abs(xi));

  ComplexField up(grid, osc), lo(grid, dec);
  if (options.channel == Channel::Upper)
    p.e_plus = VectorField(std::move(up), std::move(lo));
  else
    p.e_plus = VectorField(std::move(lo), std::move(up));
  return p;
}

VectorField e_minus(const ScatteringPoint& p) { return sigma1(p.e_plus); }

DistortedSpectrum build_spectrum(const GridPtr& grid, const SpectrumOptions& options) {
  if (!(options.dxi > 0.0) || !(options.xi_max > options.dxi) || !(options.dxi_far > 0.0) ||
      options.xi_far < options.xi_max || options.xi_tail < options.xi_far)
    throw UsageError("invalid distorted-spectrum discretization");
  DistortedSpectrum sp;
  sp.grid = grid;
  sp.potential = options.potential;
  // Positive half: uniform cells on [0, xi_max], then coarser cells up to
  // xi_tail. The negative half mirrors it.
  std::vector<double> pos, wts;
  const int n_core = static_cast<int>(std::lround(options.xi_max / options.dxi));
  const double core_dxi = options.xi_max / n_core;
  for (int j = 0; j < n_core; ++j) {
    pos.push_back((j + 0.5) * core_dxi);
    wts.push_back(core_dxi);
  }
  const int n_far = static_cast<int>(std::lround((options.xi_tail - options.xi_max) / options.dxi_far));
  if (n_far > 0) {
    const double far_dxi = (options.xi_tail - options.xi_max) / n_far;
    for (int j = 0; j < n_far; ++j) {
      pos.push_back(options.xi_max + (j + 0.5) * far_dxi);
      wts.push_back(far_dxi);
    }
  }
  for (std::size_t j = pos.size(); j-- > 0;) {
    sp.xi_nodes.push_back(-pos[j]);
    sp.weights.push_back(wts[j]);
  }
  for (std::size_t j = 0; j < pos.size(); ++j) {
    sp.xi_nodes.push_back(pos[j]);
    sp.weights.push_back(wts[j]);
  }
  sp.points.resize(sp.xi_nodes.size());

  JostOptions jo;
  jo.potential = options.potential;
  auto work = [&](std::size_t i) {
    const double xi = sp.xi_nodes[i];
    if (std::abs(xi) < options.xi_far) {
      sp.points[i] = jost_solve(xi, grid, jo);
    } else {
      ScatteringPoint p;
      p.xi = xi;
      p.s_coef = 1.0;
      p.r_coef = 0.0;
      p.e_plus = VectorField(sample(grid, [xi](double x) { return std::polar(1.0, xi * x); }),
                             ComplexField(grid));
      sp.points[i] = std::move(p);
    }
  };
  const unsigned hw = options.threads > 0 ? static_cast<unsigned>(options.threads)
                                          : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t total = sp.points.size();
  if (hw <= 1) {
    for (std::size_t i = 0; i < total; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(hw);
    for (unsigned w = 0; w < hw; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < total; i += hw) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return sp;
}

EdgeValues edge_check(const GridPtr& grid, Potential potential, double xi_min) {
  if (!(xi_min > 0.0)) throw UsageError("xi_min must be positive");
  JostOptions jo;
  jo.potential = potential;
  EdgeValues ev;
  std::array<cplx, 3> s{}, r{};
  for (int i = 0; i < 3; ++i) {
    const double xi = xi_min * (1 << i);
    ev.xi_samples.push_back(xi);
    const auto p = jost_solve(xi, grid, jo);
    s[i] = p.s_coef;
    r[i] = p.r_coef;
  }
  const double a0 = std::abs(s[0]), a1 = std::abs(s[1]), a2 = std::abs(s[2]);
  const double slack = 1e-12;
  const bool up = a0 <= a1 + slack && a1 <= a2 + slack;
  const bool down = a0 + slack >= a1 && a1 + slack >= a2;
  if (!up && !down) throw NumericalError("non-monotone extrapolation data");
  // Quadratic through (h, 2h, 4h) evaluated at 0.
  ev.s0 = (8.0 * s[0] - 6.0 * s[1] + s[2]) / 3.0;
  ev.r0 = (8.0 * r[0] - 6.0 * r[1] + r[2]) / 3.0;
  return ev;
}

EdgeValues edge_check(const DistortedSpectrum& spectrum, double xi_min) {
  return edge_check(spectrum.grid, spectrum.potential, xi_min);
}

DistortedCoefficients distorted_transform(const VectorField& f, const DistortedSpectrum& spectrum) {
  if (!(f.grid() == *spectrum.grid)) throw GridMismatch();
  DistortedCoefficients c;
  c.plus.reserve(spectrum.points.size());
  c.minus.reserve(spectrum.points.size());
  for (const auto& p : spectrum.points) {
    c.plus.push_back(inner(f, sigma3(p.e_plus)));
    c.minus.push_back(inner(f, sigma3(sigma1(p.e_plus))));
  }
  return c;
}

VectorField inverse_distorted_transform(const DistortedCoefficients& c,
                                        const DistortedSpectrum& spectrum) {
  const int n = spectrum.grid->size();
  std::vector<cplx> up(static_cast<std::size_t>(n)), lo(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < spectrum.points.size(); ++i) {
    const double w = spectrum.weights[i] / (2.0 * std::numbers::pi);
    const auto& e = spectrum.points[i].e_plus;
    const cplx fp = w * c.plus[i], fm = w * c.minus[i];
    // e_- = (e_+.lower, e_+.upper)
    for (int j = 0; j < n; ++j) {
      up[j] += e.upper[j] * fp - e.lower[j] * fm;
      lo[j] += e.lower[j] * fp - e.upper[j] * fm;
    }
  }
  return {ComplexField(spectrum.grid, std::move(up)), ComplexField(spectrum.grid, std::move(lo))};
}

cplx distorted_pairing(const VectorField& phi, const VectorField& psi,
                       const DistortedSpectrum& spectrum) {
  const auto fphi = distorted_transform(phi, spectrum);
  cplx acc = 0.0;
  for (std::size_t i = 0; i < spectrum.points.size(); ++i) {
    const auto& e = spectrum.points[i].e_plus;
    const cplx gp = inner(psi, e);
    const cplx gm = inner(psi, sigma1(e));
    acc += spectrum.weights[i] * (fphi.plus[i] * std::conj(gp) - fphi.minus[i] * std::conj(gm));
  }
  return acc / (2.0 * std::numbers::pi);
}

double frequency_window(double xi, double pass, double stop) {
  const double a = std::abs(xi);
  if (a <= pass) return 1.0;
  if (a >= stop) return 0.0;
  const double s = (a - pass) / (stop - pass);
  const double e0 = std::exp(-1.0 / (1.0 - s)), e1 = std::exp(-1.0 / s);
  return e0 / (e0 + e1);
}

VectorField band_limited_datum(const VectorField& g, const DistortedSpectrum& spectrum,
                               double pass, double stop) {
  if (!(pass >= 0.0) || !(stop > pass)) throw UsageError("need 0 <= pass < stop");
  auto c = distorted_transform(g, spectrum);
  for (std::size_t i = 0; i < spectrum.points.size(); ++i) {
    const double w = frequency_window(spectrum.xi_nodes[i], pass, stop);
    c.plus[i] *= w;
    c.minus[i] *= w;
  }
  return inverse_distorted_transform(c, spectrum);
}

VectorField evolve_by_transform(const VectorField& f, double t, const DistortedSpectrum& spectrum) {
  auto c = distorted_transform(f, spectrum);
  for (std::size_t i = 0; i < spectrum.points.size(); ++i) {
    const double energy = 1.0 + spectrum.xi_nodes[i] * spectrum.xi_nodes[i];
    c.plus[i] *= std::polar(1.0, -t * energy);
    c.minus[i] *= std::polar(1.0, t * energy);
  }
  return inverse_distorted_transform(c, spectrum);
}

namespace {

std::vector<cplx> flatten(const VectorField& f) {
  std::vector<cplx> out(f.upper.data());
  out.insert(out.end(), f.lower.data().begin(), f.lower.data().end());
  return out;
}

VectorField unflatten(const GridPtr& grid, std::span<const cplx> v) {
  const auto n = static_cast<std::size_t>(grid->size());
  return {ComplexField(grid, std::vector<cplx>(v.begin(), v.begin() + n)),
          ComplexField(grid, std::vector<cplx>(v.begin() + n, v.end()))};
}

}  // namespace

LinearEvolver::LinearEvolver(HOperator H, Options options) : H_(std::move(H)), options_(options) {
  if (!(options_.dt > 0.0)) throw UsageError("dt must be positive");
}

VectorField LinearEvolver::advance_split(const VectorField& g0, double t, double dt,
                                         const StepHook& hook) const {
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) / dt - 1e-9)));
  const double tau = t / steps;
  const GridPtr& grid = H_.grid();
  const auto k = grid->wavenumbers();
  const int n = grid->size();
  // Free half step: upper symbol -(k^2 + 1), lower +(k^2 + 1).
  std::vector<cplx> fu(static_cast<std::size_t>(n)), fl(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    const double w = k[m] * k[m] + 1.0;
    fu[m] = std::polar(1.0, -0.5 * tau * w);
    fl[m] = std::polar(1.0, 0.5 * tau * w);
  }
  // exp(i tau q M) with M = [[3, 2], [-2, -3]], M^2 = 5.
  const auto q = H_.quartic();
  std::vector<double> c(static_cast<std::size_t>(n)), s(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double th = tau * q[j] * std::sqrt(5.0);
    c[j] = std::cos(th);
    s[j] = std::sin(th) / std::sqrt(5.0);
  }
  VectorField g = g0;
  for (int step = 0; step < steps; ++step) {
    g = VectorField(apply_symbol(g.upper, fu), apply_symbol(g.lower, fl));
    for (int j = 0; j < n; ++j) {
      const cplx u = g.upper[j], v = g.lower[j];
      g.upper[j] = c[j] * u + kI * s[j] * (3.0 * u + 2.0 * v);
      g.lower[j] = c[j] * v + kI * s[j] * (-2.0 * u - 3.0 * v);
    }
    g = VectorField(apply_symbol(g.upper, fu), apply_symbol(g.lower, fl));
    if (hook) hook(g);
  }
  g.upper.require_finite("linear evolution");
  g.lower.require_finite("linear evolution");
  return g;
}

VectorField LinearEvolver::advance(const VectorField& g0, double t, double dt,
                                   const StepHook& hook) const {
  if (t == 0.0) return g0;
  if (options_.scheme == LinearScheme::Split) return advance_split(g0, t, dt, hook);
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) / dt - 1e-9)));
  const double tau = t / steps;
  const GridPtr& grid = H_.grid();
  const auto k = grid->wavenumbers();
  const int n = grid->size();
  const cplx half = kI * (0.5 * tau);

  // Free part of (1 - i tau/2 H) on each component, and its inverse.
  std::vector<cplx> pu(static_cast<std::size_t>(n)), pl(static_cast<std::size_t>(n)),
      iu(static_cast<std::size_t>(n)), il(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    const double w = k[m] * k[m] + 1.0;
    iu[m] = 1.0 - half * (-w);
    il[m] = 1.0 - half * w;
    pu[m] = 1.0 / iu[m];
    pl[m] = 1.0 / il[m];
  }
  auto precondition = [&](std::span<const cplx> y) {
    const auto f = unflatten(grid, y);
    return VectorField(apply_symbol(f.upper, pu), apply_symbol(f.lower, pl));
  };
  LinearOperator op = [&](std::span<const cplx> y, std::span<cplx> out) {
    const auto x = precondition(y);
    const auto hx = H_.apply(x);
    for (int j = 0; j < n; ++j) {
      out[j] = x.upper[j] - half * hx.upper[j];
      out[n + j] = x.lower[j] - half * hx.lower[j];
    }
  };

  VectorField g = g0;
  for (int s = 0; s < steps; ++s) {
    const auto hg = H_.apply(g);
    std::vector<cplx> rhs(2 * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      rhs[j] = g.upper[j] + half * hg.upper[j];
      rhs[n + j] = g.lower[j] + half * hg.lower[j];
    }
    auto y = flatten(VectorField(apply_symbol(g.upper, iu), apply_symbol(g.lower, il)));
    const auto res = gmres(op, rhs, y, options_.gmres_tolerance, 40, 400);
    if (!res.converged) throw NumericalError("Crank-Nicolson step rejected: GMRES did not converge");
    g = precondition(y);
    if (hook) hook(g);
  }
  g.upper.require_finite("linear evolution");
  g.lower.require_finite("linear evolution");
  return g;
}

VectorField LinearEvolver::evolve(const VectorField& g, double t, const StepHook& hook) const {
  if (!(g.grid() == *H_.grid())) throw GridMismatch();
  if (!options_.richardson) return advance(g, t, options_.dt, hook);
  const auto coarse = advance(g, t, options_.dt, hook);
  auto fine = advance(g, t, 0.5 * options_.dt, hook);
  fine *= 4.0 / 3.0;
  fine -= (1.0 / 3.0) * coarse;
  return fine;
}

DispersiveFlow::DispersiveFlow(const GridPtr& grid, Potential potential,
                               LinearEvolver::Options options)
    : evolver_(HOperator(grid, potential), options) {
  if (potential == Potential::Soliton) basis_ = root_basis(grid);
}

VectorField DispersiveFlow::project(const VectorField& f) const {
  if (!basis_) return f;
  return qnls::project(f, *basis_).dispersive;
}

LinearEvolver::StepHook DispersiveFlow::hook() const {
  if (!basis_) return {};
  return [this](VectorField& g) { g = qnls::project(g, *basis_).dispersive; };
}

VectorField DispersiveFlow::evolve(const VectorField& f, double t) const {
  return evolver_.evolve(project(f), t, hook());
}

std::vector<VectorField> DispersiveFlow::evolve_samples(const VectorField& f,
                                                        std::span<const double> times) const {
  std::vector<VectorField> out;
  VectorField g = project(f);
  double now = 0.0;
  for (double t : times) {
    if (t < now) throw UsageError("sample times must be non-decreasing and non-negative");
    g = evolver_.evolve(g, t - now, hook());
    now = t;
    out.push_back(g);
  }
  return out;
}

VectorField evolve_linear(double t, const VectorField& f, const DispersiveFlow& flow) {
  return flow.evolve(f, t);
}

DecayFit decay_exponent_fit(const VectorField& f, double theta, std::span<const double> t_samples,
                            const DispersiveFlow& flow) {
  if (theta < 0.0 || theta > 1.0) throw UsageError("theta must lie in [0, 1]");
  if (t_samples.size() < 2) throw UsageError("need at least two sample times");
  for (double t : t_samples)
    if (!(t > 0.0)) throw UsageError("sample times must be positive");
  const auto fields = flow.evolve_samples(f, t_samples);
  return decay_fit_from_samples(fields, t_samples, theta);
}

DecayFit decay_fit_from_samples(std::span<const VectorField> fields, std::span<const double> times,
                                double theta) {
  if (theta < 0.0 || theta > 1.0) throw UsageError("theta must lie in [0, 1]");
  if (fields.size() != times.size() || times.size() < 2)
    throw UsageError("need at least two (time, field) samples");
  DecayFit fit;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& u = fields[i];
    const Grid1D& g = u.grid();
    double sup = 0.0, total = 0.0, outer = 0.0;
    for (int j = 0; j < g.size(); ++j) {
      const double x = g.node(j);
      const double dens = std::norm(u.upper[j]) + std::norm(u.lower[j]);
      const double w = std::pow(std::abs(x) + 1.0, -theta);
      sup = std::max(sup, w * std::sqrt(std::max(std::norm(u.upper[j]), std::norm(u.lower[j]))));
      total += dens;
      if (std::abs(x) > 0.9 * g.half_length()) outer += dens;
    }
    const double frac = total > 0.0 ? outer / total : 0.0;
    fit.max_boundary_fraction = std::max(fit.max_boundary_fraction, frac);
    if (frac > 1e-6)
      throw NumericalError("wraparound detected: boundary mass fraction " + std::to_string(frac) +
                           " at t = " + std::to_string(times[i]));
    if (!(times[i] > 0.0) || !(sup > 0.0)) throw UsageError("decay fit needs t > 0 and nonzero fields");
    fit.times.push_back(times[i]);
    fit.weighted_sup.push_back(sup);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(fit.times.size());
  for (std::size_t i = 0; i < fit.times.size(); ++i) {
    const double lx = std::log(fit.times[i]), ly = std::log(fit.weighted_sup[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / m;
  return fit;
}

}  // namespace qnls
