#include "qnls/spectral.hpp"

#include <cmath>
#include <numbers>

#include "qnls/errors.hpp"
#include "qnls/fft.hpp"

namespace qnls {

std::vector<cplx> forward_transform(const ComplexField& f) { return fft::forward(f.values()); }

ComplexField inverse_transform(const GridPtr& grid, std::span<const cplx> spectrum) {
  if (static_cast<int>(spectrum.size()) != grid->size())
    throw UsageError("spectrum length does not match grid");
  return ComplexField(grid, fft::inverse(spectrum));
}

double spectral_quadratic_sum(const Grid1D& grid, std::span<const cplx> spectrum) {
  double s = 0.0;
  for (const auto& c : spectrum) s += std::norm(c);
  return s * grid.spacing() / grid.size();
}

ComplexField apply_symbol(const ComplexField& f, std::span<const cplx> symbol) {
  if (static_cast<int>(symbol.size()) != f.size()) throw UsageError("symbol length mismatch");
  auto spec = fft::forward(f.values());
  for (std::size_t m = 0; m < spec.size(); ++m) spec[m] *= symbol[m];
  ComplexField out(f.grid_ptr());
  fft::inverse(spec, out.values());
  return out;
}

ComplexField spectral_derivative(const ComplexField& f, int order) {
  if (order < 1) throw UsageError("derivative order must be at least 1");
  const auto& grid = f.grid();
  const auto k = grid.wavenumbers();
  std::vector<cplx> symbol(k.size());
  const cplx i(0.0, 1.0);
  for (std::size_t m = 0; m < k.size(); ++m) symbol[m] = std::pow(i * k[m], order);
  if (order % 2 == 1) symbol[static_cast<std::size_t>(grid.size() / 2)] = 0.0;
  return apply_symbol(f, symbol);
}

cplx inner(const ComplexField& f, const ComplexField& g) {
  if (!f.same_grid(g)) throw GridMismatch();
  cplx s = 0.0;
  for (int j = 0; j < f.size(); ++j) s += f[j] * std::conj(g[j]);
  return s * f.grid().spacing();
}

cplx inner(const VectorField& f, const VectorField& g) {
  return inner(f.upper, g.upper) + inner(f.lower, g.lower);
}

cplx bilinear(const ComplexField& f, const ComplexField& g) {
  if (!f.same_grid(g)) throw GridMismatch();
  cplx s = 0.0;
  for (int j = 0; j < f.size(); ++j) s += f[j] * g[j];
  return s * f.grid().spacing();
}

double norm_sq(const ComplexField& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s += std::norm(v);
  return s * f.grid().spacing();
}

double norm(const ComplexField& f) { return std::sqrt(norm_sq(f)); }

double norm(const VectorField& f) { return std::sqrt(norm_sq(f.upper) + norm_sq(f.lower)); }

double max_abs(const ComplexField& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs(const VectorField& f) { return std::max(max_abs(f.upper), max_abs(f.lower)); }

cplx integrate(const ComplexField& f) {
  cplx s = 0.0;
  for (const auto& v : f.values()) s += v;
  return s * f.grid().spacing();
}

std::vector<cplx> interpolate(const ComplexField& f, std::span<const double> positions) {
  const auto& grid = f.grid();
  const int n = grid.size();
  const auto spec = fft::forward(f.values());
  const double dk = std::numbers::pi / grid.half_length();
  const double x0 = grid.node(0);
  const int half = n / 2;
  std::vector<cplx> out(positions.size());
  for (std::size_t p = 0; p < positions.size(); ++p) {
    const double s = positions[p] - x0;
    const cplx step = std::polar(1.0, dk * s);
    // Positive modes 0..half-1 and negative modes -1..-(half-1).
    cplx pos = 1.0, neg = 1.0, acc = spec[0];
    const cplx step_conj = std::conj(step);
    for (int m = 1; m < half; ++m) {
      pos *= step;
      neg *= step_conj;
      acc += spec[static_cast<std::size_t>(m)] * pos + spec[static_cast<std::size_t>(n - m)] * neg;
    }
    // Nyquist mode split symmetrically.
    acc += spec[static_cast<std::size_t>(half)] * std::cos(dk * half * s);
    out[p] = acc / static_cast<double>(n);
  }
  return out;
}

ComplexField resample(const ComplexField& f, const GridPtr& target) {
  const double L = f.grid().half_length();
  std::vector<double> inside;
  std::vector<int> index;
  for (int j = 0; j < target->size(); ++j) {
    const double x = target->node(j);
    if (x >= -L && x < L) {
      inside.push_back(x);
      index.push_back(j);
    }
  }
  const auto vals = interpolate(f, inside);
  ComplexField out(target);
  for (std::size_t p = 0; p < index.size(); ++p) out[index[p]] = vals[p];
  return out;
}

ComplexField pointwise_product(const ComplexField& a, const ComplexField& b) {
  if (!a.same_grid(b)) throw GridMismatch();
  ComplexField out(a.grid_ptr());
  for (int j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
  return out;
}

ComplexField multiply_by_x(const ComplexField& f) {
  ComplexField out(f.grid_ptr());
  for (int j = 0; j < f.size(); ++j) out[j] = f.grid().node(j) * f[j];
  return out;
}

}  // namespace qnls
