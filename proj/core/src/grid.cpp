#include "qnls/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qnls/errors.hpp"

namespace qnls {

Grid1D::Grid1D(double half_length, int point_count)
    : half_length_(half_length), n_(point_count) {
  if (!(half_length > 0.0) || !std::isfinite(half_length))
    throw UsageError("grid half-length L must be positive and finite");
  if (point_count % 2 != 0) throw UsageError("n must be even");
  if (point_count < 8) throw UsageError("n must be at least 8");
  h_ = 2.0 * half_length / point_count;
  nodes_.resize(static_cast<std::size_t>(n_));
  k_.resize(static_cast<std::size_t>(n_));
  const double dk = std::numbers::pi / half_length;
  for (int j = 0; j < n_; ++j) {
    nodes_[j] = -half_length + j * h_;
    const int m = j < n_ / 2 ? j : j - n_;
    k_[j] = m * dk;
  }
}

double Grid1D::max_wavenumber() const { return std::numbers::pi / h_; }

GridPtr make_grid(double half_length, int point_count) {
  return std::make_shared<const Grid1D>(half_length, point_count);
}

ComplexField::ComplexField(GridPtr grid)
    : grid_(std::move(grid)), values_(static_cast<std::size_t>(grid_->size())) {}

ComplexField::ComplexField(GridPtr grid, std::vector<cplx> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != grid_->size())
    throw UsageError("field length " + std::to_string(values_.size()) +
                     " does not match grid size " + std::to_string(grid_->size()));
}

bool ComplexField::is_finite() const {
  for (const auto& v : values_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

void ComplexField::require_finite(const char* what) const {
  if (!is_finite()) throw NumericalError(std::string("non-finite samples in ") + what);
}

bool ComplexField::same_grid(const ComplexField& other) const {
  return grid_ == other.grid_ || (grid_ && other.grid_ && *grid_ == *other.grid_);
}

ComplexField& ComplexField::operator+=(const ComplexField& other) {
  if (!same_grid(other)) throw GridMismatch();
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
  return *this;
}

ComplexField& ComplexField::operator-=(const ComplexField& other) {
  if (!same_grid(other)) throw GridMismatch();
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= other.values_[j];
  return *this;
}

ComplexField& ComplexField::operator*=(cplx scale) {
  for (auto& v : values_) v *= scale;
  return *this;
}

ComplexField ComplexField::conj() const {
  ComplexField out(grid_);
  for (std::size_t j = 0; j < values_.size(); ++j) out.values_[j] = std::conj(values_[j]);
  return out;
}

ComplexField operator+(ComplexField a, const ComplexField& b) { return a += b; }
ComplexField operator-(ComplexField a, const ComplexField& b) { return a -= b; }
ComplexField operator*(cplx s, ComplexField a) { return a *= s; }
ComplexField operator*(ComplexField a, cplx s) { return a *= s; }

VectorField::VectorField(ComplexField u, ComplexField l) : upper(std::move(u)), lower(std::move(l)) {
  if (!upper.same_grid(lower)) throw GridMismatch();
}

VectorField VectorField::from_scalar(const ComplexField& u) { return {u, u.conj()}; }

VectorField VectorField::zeros(const GridPtr& grid) {
  return {ComplexField(grid), ComplexField(grid)};
}

VectorField& VectorField::operator+=(const VectorField& o) {
  upper += o.upper;
  lower += o.lower;
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  upper -= o.upper;
  lower -= o.lower;
  return *this;
}

VectorField& VectorField::operator*=(cplx s) {
  upper *= s;
  lower *= s;
  return *this;
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(cplx s, VectorField a) { return a *= s; }

VectorField sigma1(const VectorField& f) { return {f.lower, f.upper}; }

VectorField sigma3(const VectorField& f) { return {f.upper, -1.0 * f.lower}; }

}  // namespace qnls
