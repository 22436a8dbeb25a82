#pragma once

#include <span>
#include <vector>

#include "qnls/grid.hpp"

namespace qnls {

// Unnormalized DFT coefficients of the samples (FFT order, matching
// Grid1D::wavenumbers()).
std::vector<cplx> forward_transform(const ComplexField& f);
ComplexField inverse_transform(const GridPtr& grid, std::span<const cplx> spectrum);
// Transform-space counterpart of h * sum |f_j|^2.
double spectral_quadratic_sum(const Grid1D& grid, std::span<const cplx> spectrum);

// d^order f / dx^order through multiplication by (i k)^order; the Nyquist
// mode is dropped for odd orders so that real fields stay real.
ComplexField spectral_derivative(const ComplexField& f, int order);

// Multiplies the transform of f by symbol[m] (FFT order).
ComplexField apply_symbol(const ComplexField& f, std::span<const cplx> symbol);

// Hermitian pairing h * sum f_j conj(g_j); for vector fields the sum of the
// component pairings.
cplx inner(const ComplexField& f, const ComplexField& g);
cplx inner(const VectorField& f, const VectorField& g);
// Bilinear pairing h * sum f_j g_j (no conjugation).
cplx bilinear(const ComplexField& f, const ComplexField& g);

double norm_sq(const ComplexField& f);
double norm(const ComplexField& f);
double norm(const VectorField& f);
double max_abs(const ComplexField& f);
double max_abs(const VectorField& f);
// Trapezoid quadrature h * sum f_j.
cplx integrate(const ComplexField& f);

// Band-limited (trigonometric) interpolation of f at arbitrary positions;
// positions are taken modulo the period 2L.
std::vector<cplx> interpolate(const ComplexField& f, std::span<const double> positions);

// Resamples f onto another grid by trigonometric interpolation. Points of the
// target grid outside [-L, L) of the source grid are set to zero.
ComplexField resample(const ComplexField& f, const GridPtr& target);

// Pointwise helpers.
ComplexField pointwise_product(const ComplexField& a, const ComplexField& b);
ComplexField multiply_by_x(const ComplexField& f);

}  // namespace qnls
