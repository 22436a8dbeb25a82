#include "qnls/soliton.hpp"

#include <cmath>

#include "qnls/errors.hpp"
#include "qnls/spectral.hpp"

namespace qnls {
namespace {

void require_alpha(double alpha) {
  if (!(alpha > 0.0)) throw UsageError("alpha must be positive");
}

double checked_scale(double a, double b, double t) {
  const double s = a + b * t;
  if (!(s > 0.0)) throw UsageError("evaluation at blow-up time (a + b t <= 0)");
  return s;
}

}  // namespace

double phi0(double x, double alpha) {
  require_alpha(alpha);
  const double y = 2.0 * std::sqrt(alpha) * x;
  // sech^{1/2}(y) = sqrt(2 e^{-|y|} / (1 + e^{-2|y|})), stable for large |y|.
  const double e = std::exp(-std::abs(y));
  return std::pow(3.0 * alpha, 0.25) * std::sqrt(2.0 * e / (1.0 + e * e));
}

double phi0_dx(double x, double alpha) {
  const double s = std::sqrt(alpha);
  return -s * std::tanh(2.0 * s * x) * phi0(x, alpha);
}

double phi0_dxx(double x, double alpha) {
  const double p = phi0(x, alpha);
  return alpha * p - std::pow(p, 5);
}

double phi0_dxxx(double x) {
  const double p = phi0(x);
  return phi0_dx(x) * (1.0 - 5.0 * std::pow(p, 4));
}

GalileiParams compose(const GalileiParams& second, const GalileiParams& first) {
  return {first.gamma + second.gamma - first.v * second.mu0, first.v + second.v,
          first.mu0 + second.mu0};
}

void SL2Params::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d))
    throw UsageError("SL(2,R) entries must be finite");
  if (std::abs(a * d - b * c - 1.0) > 1e-12) throw UsageError("SL(2,R) matrix must have ad - bc = 1");
}

ComplexField sample_at(const SpacetimeField& psi, double t, const GridPtr& grid) {
  return sample(grid, [&](double x) { return psi(t, x); });
}

SpacetimeField standing_wave_solution(double alpha) {
  require_alpha(alpha);
  return [alpha](double t, double x) { return std::polar(phi0(x, alpha), alpha * t); };
}

ComplexField standing_wave(double t, double alpha, const GridPtr& grid) {
  return sample_at(standing_wave_solution(alpha), t, grid);
}

SpacetimeField galilei(SpacetimeField psi, const GalileiParams& g) {
  if (!std::isfinite(g.gamma) || !std::isfinite(g.v) || !std::isfinite(g.mu0))
    throw UsageError("Galilei parameters must be finite");
  return [psi = std::move(psi), g](double t, double x) {
    return std::polar(1.0, g.gamma + g.v * x - g.v * g.v * t) * psi(t, x - 2.0 * t * g.v - g.mu0);
  };
}

ComplexField galilei_apply(const SpacetimeField& psi, const GalileiParams& g, double t,
                           const GridPtr& grid) {
  return sample_at(galilei(psi, g), t, grid);
}

SpacetimeField sl2(SpacetimeField psi, const SL2Params& m) {
  m.validate();
  return [psi = std::move(psi), m](double t, double x) {
    const double s = checked_scale(m.a, m.b, t);
    return std::polar(1.0 / std::sqrt(s), m.b * x * x / (4.0 * s)) *
           psi((m.c + m.d * t) / s, x / s);
  };
}

ComplexField sl2_apply(const SpacetimeField& psi, const SL2Params& m, double t,
                       const GridPtr& grid) {
  return sample_at(sl2(psi, m), t, grid);
}

ComplexField sl2_apply_samples(const ComplexField& psi_at_source_time, const SL2Params& m,
                               double t) {
  m.validate();
  const double s = checked_scale(m.a, m.b, t);
  const auto& grid = psi_at_source_time.grid_ptr();
  const double L = grid->half_length();
  std::vector<double> pos;
  std::vector<int> idx;
  for (int j = 0; j < grid->size(); ++j) {
    const double y = grid->node(j) / s;
    if (y >= -L && y < L) {
      pos.push_back(y);
      idx.push_back(j);
    }
  }
  const auto vals = interpolate(psi_at_source_time, pos);
  ComplexField out(grid);
  for (std::size_t p = 0; p < idx.size(); ++p) {
    const double x = grid->node(idx[p]);
    out[idx[p]] = std::polar(1.0 / std::sqrt(s), m.b * x * x / (4.0 * s)) * vals[p];
  }
  return out;
}

SpacetimeField explicit_blowup_solution(const SL2Params& m) {
  m.validate();
  return [m](double t, double x) {
    const double s = checked_scale(m.a, m.b, t);
    const double phase = (m.c + m.d * t) / s + m.b * x * x / (4.0 * s);
    return std::polar(phi0(x / s) / std::sqrt(s), phase);
  };
}

ComplexField explicit_blowup(double t, const GridPtr& grid, const SL2Params& m) {
  return sample_at(explicit_blowup_solution(m), t, grid);
}

SpacetimeField exact_modulated_solution(const ExactWaveParams& p) {
  if (p.b == 0.0) throw UsageError("exact modulated wave needs b != 0");
  return [p](double t, double x) {
    const double s = checked_scale(p.a, p.b, t);
    const double y = x - 2.0 * t * p.v - p.mu0;
    const double phase =
        -1.0 / (p.b * s) - p.v * p.v * t + p.gamma + p.v * x + p.b * y * y / (4.0 * s);
    return std::polar(phi0(y / s) / std::sqrt(s), phase);
  };
}

ComplexField exact_modulated_W(double t, const GridPtr& grid, const ExactWaveParams& p) {
  return sample_at(exact_modulated_solution(p), t, grid);
}

SpacetimeField exact_modulated_by_symmetries(const ExactWaveParams& p) {
  if (p.b == 0.0) throw UsageError("exact modulated wave needs b != 0");
  const SL2Params m{p.a, p.b, -1.0 / p.b, 0.0};
  return galilei(sl2(standing_wave_solution(1.0), m), GalileiParams{p.gamma, p.v, p.mu0});
}

double pde_residual(const ComplexField& before, const ComplexField& now, const ComplexField& after,
                    double delta) {
  if (!(delta > 0.0)) throw UsageError("time step delta must be positive");
  if (!before.same_grid(now) || !after.same_grid(now)) throw GridMismatch();
  const auto dxx = spectral_derivative(now, 2);
  const cplx i(0.0, 1.0);
  double worst = 0.0;
  for (int j = 0; j < now.size(); ++j) {
    const cplx dt = (after[j] - before[j]) / (2.0 * delta);
    const double a2 = std::norm(now[j]);
    const cplx r = i * dt + dxx[j] + a2 * a2 * now[j];
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double max_diff_modulo_phase(const ComplexField& a, const ComplexField& b) {
  const cplx overlap = inner(a, b);
  const cplx phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : cplx(1.0);
  double worst = 0.0;
  for (int j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - phase * b[j]));
  return worst;
}

}  // namespace qnls
