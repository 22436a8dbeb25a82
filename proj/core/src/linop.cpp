#include "qnls/linop.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>

#include "qnls/errors.hpp"
#include "qnls/fft.hpp"
#include "qnls/krylov.hpp"
#include "qnls/soliton.hpp"
#include "qnls/spectral.hpp"

namespace qnls {
namespace {

constexpr cplx kI{0.0, 1.0};

std::vector<double> quartic_samples(const Grid1D& grid) {
  std::vector<double> q(static_cast<std::size_t>(grid.size()));
  for (int j = 0; j < grid.size(); ++j) q[j] = std::pow(phi0(grid.node(j)), 4);
  return q;
}

// Second-derivative matrix of the Fourier collocation scheme (real, symmetric).
Eigen::MatrixXd second_derivative_matrix(const GridPtr& grid) {
  const int n = grid->size();
  Eigen::MatrixXd d2(n, n);
  ComplexField unit(grid);
  for (int j = 0; j < n; ++j) {
    std::fill(unit.data().begin(), unit.data().end(), cplx(0.0));
    unit[j] = 1.0;
    const auto col = spectral_derivative(unit, 2);
    for (int i = 0; i < n; ++i) d2(i, j) = col[i].real();
  }
  return d2;
}

VectorField pair(const GridPtr& grid, const std::vector<cplx>& up, const std::vector<cplx>& lo) {
  return {ComplexField(grid, up), ComplexField(grid, lo)};
}

}  // namespace

ScalarOperator::ScalarOperator(GridPtr grid, double potential_weight) : grid_(std::move(grid)) {
  potential_ = quartic_samples(*grid_);
  for (auto& v : potential_) v *= potential_weight;
}

ComplexField ScalarOperator::apply(const ComplexField& f) const {
  auto out = spectral_derivative(f, 2);
  for (int j = 0; j < f.size(); ++j) out[j] = -out[j] + (1.0 - potential_[j]) * f[j];
  return out;
}

LOperators build_L_operators(const GridPtr& grid) {
  if (grid->half_length() < 30.0) throw UsageError("grid must have L >= 30 to resolve phi0");
  return {ScalarOperator(grid, 1.0), ScalarOperator(grid, 5.0)};
}

HOperator::HOperator(GridPtr grid, Potential potential)
    : grid_(std::move(grid)), potential_kind_(potential) {
  quartic_ = quartic_samples(*grid_);
  if (potential == Potential::Free) std::fill(quartic_.begin(), quartic_.end(), 0.0);
}

VectorField HOperator::apply_impl(const VectorField& f, double s) const {
  auto du = spectral_derivative(f.upper, 2);
  auto dv = spectral_derivative(f.lower, 2);
  for (int j = 0; j < f.upper.size(); ++j) {
    const double q = quartic_[static_cast<std::size_t>(j)];
    const cplx u = f.upper[j], v = f.lower[j];
    du[j] = du[j] - u + 3.0 * q * u + s * 2.0 * q * v;
    dv[j] = -s * 2.0 * q * u - dv[j] + v - 3.0 * q * v;
  }
  return {std::move(du), std::move(dv)};
}

VectorField HOperator::apply(const VectorField& f) const { return apply_impl(f, 1.0); }
VectorField HOperator::apply_adjoint(const VectorField& f) const { return apply_impl(f, -1.0); }

Eigen::MatrixXd HOperator::dense_impl(double s) const {
  const int n = grid_->size();
  if (n > 2048) throw UsageError("dense assembly is limited to n <= 2048");
  const auto d2 = second_derivative_matrix(grid_);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  h.topLeftCorner(n, n) = d2;
  h.bottomRightCorner(n, n) = -d2;
  for (int j = 0; j < n; ++j) {
    const double q = quartic_[static_cast<std::size_t>(j)];
    h(j, j) += -1.0 + 3.0 * q;
    h(n + j, n + j) += 1.0 - 3.0 * q;
    h(j, n + j) = s * 2.0 * q;
    h(n + j, j) = -s * 2.0 * q;
  }
  return h;
}

Eigen::MatrixXd HOperator::dense() const { return dense_impl(1.0); }
Eigen::MatrixXd HOperator::dense_adjoint() const { return dense_impl(-1.0); }

VectorField apply_H(const HOperator& H, const VectorField& f) { return H.apply(f); }
VectorField apply_H_star(const HOperator& H, const VectorField& f) { return H.apply_adjoint(f); }

ComplexField solve_rho(const GridPtr& grid) {
  const auto ops = build_L_operators(grid);
  const int n = grid->size();
  const int half = n / 2;
  const int m = half + 1;  // even functions are fixed by x_0 .. x_{n/2}

  auto expand = [&](std::span<const cplx> w) {
    ComplexField full(grid);
    for (int j = 0; j <= half; ++j) full[j] = w[static_cast<std::size_t>(j)];
    for (int j = half + 1; j < n; ++j) full[j] = w[static_cast<std::size_t>(n - j)];
    return full;
  };
  // Right preconditioner (1 - d^2)^{-1}.
  std::vector<cplx> precond(static_cast<std::size_t>(n));
  const auto k = grid->wavenumbers();
  for (int j = 0; j < n; ++j) precond[j] = 1.0 / (1.0 + k[j] * k[j]);

  LinearOperator op = [&](std::span<const cplx> in, std::span<cplx> out) {
    const auto y = apply_symbol(expand(in), precond);
    const auto r = ops.plus.apply(y);
    for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(j)] = r[j];
  };
  std::vector<cplx> rhs(static_cast<std::size_t>(m)), sol(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double x = grid->node(j);
    rhs[j] = x * x * phi0(x);
  }
  const auto res = gmres(op, rhs, sol, 1e-12, 120, 3000);
  if (!res.converged)
    throw NumericalError("L_+ rho = x^2 phi0 solve did not converge (residual " +
                         std::to_string(res.relative_residual) + ")");
  auto rho = apply_symbol(expand(sol), precond);
  for (auto& v : rho.data()) v = v.real();
  // Exact evenness on the periodic grid.
  ComplexField even(grid);
  for (int j = 0; j < n; ++j) even[j] = 0.5 * (rho[j] + rho[grid->mirror_index(j)]);
  return even;
}

RootSpaceBasis root_basis(const GridPtr& grid) {
  RootSpaceBasis b;
  b.grid = grid;
  b.rho = solve_rho(grid);
  const int n = grid->size();
  std::vector<cplx> phi(n), dphi(n), g(n), xphi(n), x2phi(n), rho(n);
  for (int j = 0; j < n; ++j) {
    const double x = grid->node(j);
    phi[j] = phi0(x);
    dphi[j] = phi0_dx(x);
    g[j] = x * phi0_dx(x) + 0.5 * phi0(x);
    xphi[j] = x * phi0(x);
    x2phi[j] = x * x * phi0(x);
    rho[j] = b.rho[j];
  }
  auto times = [](const std::vector<cplx>& v, cplx s) {
    std::vector<cplx> out(v);
    for (auto& e : out) e *= s;
    return out;
  };
  // (a, a) "real-symmetric" and (i b, -i b) "imaginary-antisymmetric" modes.
  auto sym = [&](const std::vector<cplx>& a) { return pair(grid, a, a); };
  auto anti = [&](const std::vector<cplx>& a) { return pair(grid, times(a, kI), times(a, -kI)); };

  b.eta = {anti(phi), sym(g), sym(dphi), anti(xphi), anti(x2phi), sym(rho)};
  b.xi = {sym(phi), anti(g), anti(dphi), sym(xphi), sym(x2phi), anti(rho)};

  const ComplexField phi_f(grid, phi), x2phi_f(grid, x2phi);
  b.kappa1 = inner(phi_f, phi_f).real();
  b.kappa2 = inner(b.rho, phi_f).real();
  b.kappa3 = inner(x2phi_f, b.rho).real();
  return b;
}

Gram gram_table(const RootSpaceBasis& basis) {
  Gram g;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) g(i, j) = inner(basis.eta[i], basis.xi[j]);
  return g;
}

Gram expected_gram_table(double k1, double k2, double k3) {
  Gram g = Gram::Zero();
  g(5, 0) = 2.0 * k2;
  g(4, 1) = -4.0 * k2;
  g(3, 2) = -k1;
  g(2, 3) = -k1;
  g(1, 4) = -4.0 * k2;
  g(5, 4) = 2.0 * k3;
  g(0, 5) = 2.0 * k2;
  g(4, 5) = 2.0 * k3;
  return g;
}

RootCoefficients coefficients_from_pairings(const Gram& gram, const RootCoefficients& pairings) {
  Eigen::Matrix<cplx, 6, 1> rhs;
  for (int j = 0; j < 6; ++j) rhs(j) = pairings[j];
  const Eigen::FullPivLU<Gram> lu(gram.transpose());
  if (!lu.isInvertible() || lu.rcond() < 1e-12)
    throw NumericalError("singular Gram system: root basis is corrupted");
  const Eigen::Matrix<cplx, 6, 1> lam = lu.solve(rhs);
  RootCoefficients out;
  for (int i = 0; i < 6; ++i) out[i] = lam(i);
  return out;
}

Projection project(const VectorField& f, const RootSpaceBasis& basis) {
  RootCoefficients pairings;
  for (int j = 0; j < 6; ++j) pairings[j] = inner(f, basis.xi[j]);
  Projection p;
  p.lambda = coefficients_from_pairings(gram_table(basis), pairings);
  p.dispersive = f - root_part(p, basis);
  return p;
}

VectorField root_part(const Projection& p, const RootSpaceBasis& basis) {
  auto out = VectorField::zeros(basis.grid);
  for (int i = 0; i < 6; ++i) out += p.lambda[i] * basis.eta[i];
  return out;
}

SpectrumReport spectrum_check(const HOperator& H, double tol_edge) {
  Eigen::MatrixXd h = H.dense();
  const int dim = static_cast<int>(h.rows());
  SpectrumReport report;

  {
    // ||H||_2 by power iteration on H^T H.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(dim).normalized();
    double sigma = 0.0;
    for (int it = 0; it < 200; ++it) {
      Eigen::VectorXd w = h.transpose() * (h * v);
      const double nw = w.norm();
      if (nw == 0.0) break;
      const double next = std::sqrt(nw);
      v = w / nw;
      if (std::abs(next - sigma) < 1e-10 * next) {
        sigma = next;
        break;
      }
      sigma = next;
    }
    report.operator_norm = sigma;
  }

  Eigen::RealSchur<Eigen::MatrixXd> schur(h);
  if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition failed");
  Eigen::MatrixXd t = schur.matrixT();
  Eigen::MatrixXd q = schur.matrixU();

  std::vector<cplx> eig(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim;) {
    if (i + 1 < dim && t(i + 1, i) != 0.0) {
      const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
      const double tr = 0.5 * (a + d);
      const double disc = std::sqrt(std::abs(0.25 * (a - d) * (a - d) + b * c));
      eig[i] = {tr, disc};
      eig[i + 1] = {tr, -disc};
      i += 2;
    } else {
      eig[i] = t(i, i);
      ++i;
    }
  }
  std::vector<double> mags(eig.size());
  for (std::size_t i = 0; i < eig.size(); ++i) mags[i] = std::abs(eig[i]);
  std::vector<double> sorted = mags;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < std::min<std::size_t>(12, eig.size()); ++i) {
    auto it = std::find(mags.begin(), mags.end(), sorted[i]);
    report.smallest_eigenvalues.push_back(eig[static_cast<std::size_t>(it - mags.begin())]);
  }

  // Cluster cutoff: geometric mean across the widest relative gap among the
  // 16 smallest moduli.
  int cluster = 1;
  double best = 0.0;
  const int scan = std::min(16, dim - 1);
  for (int k = 1; k < scan; ++k) {
    const double ratio = sorted[k] / std::max(sorted[k - 1], 1e-300);
    if (ratio > best) {
      best = ratio;
      cluster = k;
    }
  }
  report.threshold = std::sqrt(sorted[cluster - 1] * sorted[cluster]);
  report.cluster_separation = best;

  std::vector<lapack_logical> select(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) select[i] = mags[i] < report.threshold ? 1 : 0;
  std::vector<double> wr(static_cast<std::size_t>(dim)), wi(static_cast<std::size_t>(dim));
  lapack_int m = 0;
  // job B: the installed dtrsen dereferences iwork even for job N.
  double s_cond = 0.0, sep = 0.0;
  const lapack_int info = LAPACKE_dtrsen(LAPACK_COL_MAJOR, 'B', 'V', select.data(), dim, t.data(),
                                         dim, q.data(), dim, wr.data(), wi.data(), &m, &s_cond, &sep);
  if (info != 0) throw NumericalError("Schur reordering failed (dtrsen info " + std::to_string(info) + ")");
  report.near_zero_count = static_cast<int>(m);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.topLeftCorner(m, m));
  const auto sv = svd.singularValues();
  const double cutoff = 1e-6 * report.operator_norm;
  for (int i = 0; i < sv.size(); ++i) {
    report.cluster_singular_values.push_back(sv(i));
    if (sv(i) > cutoff) ++report.restricted_rank;
  }
  report.geometric_multiplicity = report.near_zero_count - report.restricted_rank;

  double min_re = std::numeric_limits<double>::infinity();
  for (int i = 0; i < dim; ++i)
    if (mags[i] >= report.threshold) min_re = std::min(min_re, std::abs(eig[i].real()));
  report.min_abs_real_outside = min_re;
  report.spectral_gap_ok = min_re >= 1.0 - tol_edge;
  return report;
}

}  // namespace qnls
