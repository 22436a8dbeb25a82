#include "qnls/krylov.hpp"

#include <cmath>
#include <vector>

namespace qnls {
namespace {

double vec_norm(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& c : v) s += std::norm(c);
  return std::sqrt(s);
}

cplx vec_dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

GmresResult gmres(const LinearOperator& op, std::span<const cplx> rhs, std::span<cplx> x,
                  double tolerance, int restart, int max_iterations) {
  const std::size_t n = rhs.size();
  GmresResult result;
  const double bnorm = vec_norm(rhs);
  if (bnorm == 0.0) {
    for (auto& v : x) v = 0.0;
    result.converged = true;
    return result;
  }
  std::vector<std::vector<cplx>> basis(static_cast<std::size_t>(restart) + 1,
                                       std::vector<cplx>(n));
  std::vector<std::vector<cplx>> hess(static_cast<std::size_t>(restart) + 1,
                                      std::vector<cplx>(static_cast<std::size_t>(restart)));
  std::vector<cplx> cs(static_cast<std::size_t>(restart)), sn(static_cast<std::size_t>(restart)),
      g(static_cast<std::size_t>(restart) + 1);
  std::vector<cplx> work(n);

  while (result.iterations < max_iterations) {
    op(x, work);
    for (std::size_t i = 0; i < n; ++i) basis[0][i] = rhs[i] - work[i];
    double beta = vec_norm(basis[0]);
    result.relative_residual = beta / bnorm;
    if (result.relative_residual <= tolerance) {
      result.converged = true;
      return result;
    }
    for (auto& v : basis[0]) v /= beta;
    std::fill(g.begin(), g.end(), cplx(0.0));
    g[0] = beta;

    int k = 0;
    for (; k < restart && result.iterations < max_iterations; ++k) {
      ++result.iterations;
      auto& w = basis[static_cast<std::size_t>(k) + 1];
      op(basis[static_cast<std::size_t>(k)], w);
      for (int i = 0; i <= k; ++i) {
        const cplx h = vec_dot(basis[static_cast<std::size_t>(i)], w);
        hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = h;
        for (std::size_t r = 0; r < n; ++r) w[r] -= h * basis[static_cast<std::size_t>(i)][r];
      }
      const double hnext = vec_norm(w);
      hess[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(k)] = hnext;
      if (hnext > 0.0)
        for (auto& v : w) v /= hnext;
      for (int i = 0; i < k; ++i) {
        auto& a = hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        auto& b = hess[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(k)];
        const cplx t = std::conj(cs[static_cast<std::size_t>(i)]) * a +
                       std::conj(sn[static_cast<std::size_t>(i)]) * b;
        b = -sn[static_cast<std::size_t>(i)] * a + cs[static_cast<std::size_t>(i)] * b;
        a = t;
      }
      auto& a = hess[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
      auto& b = hess[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(k)];
      const double r = std::hypot(std::abs(a), std::abs(b));
      cs[static_cast<std::size_t>(k)] = r == 0.0 ? cplx(1.0) : a / r;
      sn[static_cast<std::size_t>(k)] = r == 0.0 ? cplx(0.0) : b / r;
      a = r;
      b = 0.0;
      g[static_cast<std::size_t>(k) + 1] = -sn[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)];
      g[static_cast<std::size_t>(k)] = std::conj(cs[static_cast<std::size_t>(k)]) * g[static_cast<std::size_t>(k)];
      result.relative_residual = std::abs(g[static_cast<std::size_t>(k) + 1]) / bnorm;
      if (result.relative_residual <= tolerance || hnext == 0.0) {
        ++k;
        break;
      }
    }
    // Back substitution and update.
    std::vector<cplx> y(static_cast<std::size_t>(k));
    for (int i = k - 1; i >= 0; --i) {
      cplx s = g[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j)
        s -= hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s / hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < k; ++j)
      for (std::size_t r = 0; r < n; ++r) x[r] += y[static_cast<std::size_t>(j)] * basis[static_cast<std::size_t>(j)][r];
    if (result.relative_residual <= tolerance) {
      // Confirm with the true residual.
      op(x, work);
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) res += std::norm(rhs[i] - work[i]);
      result.relative_residual = std::sqrt(res) / bnorm;
      if (result.relative_residual <= 10.0 * tolerance) {
        result.converged = true;
        return result;
      }
    }
  }
  return result;
}

}  // namespace qnls
