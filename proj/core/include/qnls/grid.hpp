#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace qnls {

using cplx = std::complex<double>;

// Periodic uniform grid on [-L, L) with n nodes x_j = -L + j h.
//
// Wavenumbers are stored in FFT order: k_m = m pi / L for m < n/2 and
// (m - n) pi / L otherwise, so index n/2 holds the single Nyquist mode.
class Grid1D {
 public:
  Grid1D(double half_length, int point_count);

  double half_length() const { return half_length_; }
  int size() const { return n_; }
  double spacing() const { return h_; }
  double node(int j) const { return -half_length_ + j * h_; }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> wavenumbers() const { return k_; }
  double max_wavenumber() const;
  // Index of the node x = 0.
  int origin_index() const { return n_ / 2; }
  // Index of the node mirrored through the origin (periodic).
  int mirror_index(int j) const { return (n_ - j) % n_; }

  bool operator==(const Grid1D& other) const {
    return n_ == other.n_ && half_length_ == other.half_length_;
  }

 private:
  double half_length_;
  int n_;
  double h_;
  std::vector<double> nodes_;
  std::vector<double> k_;
};

using GridPtr = std::shared_ptr<const Grid1D>;

GridPtr make_grid(double half_length, int point_count);

// Complex samples on a grid.
class ComplexField {
 public:
  ComplexField() = default;
  explicit ComplexField(GridPtr grid);
  ComplexField(GridPtr grid, std::vector<cplx> values);

  const GridPtr& grid_ptr() const { return grid_; }
  const Grid1D& grid() const { return *grid_; }
  int size() const { return static_cast<int>(values_.size()); }

  cplx& operator[](int j) { return values_[static_cast<std::size_t>(j)]; }
  const cplx& operator[](int j) const { return values_[static_cast<std::size_t>(j)]; }
  std::span<cplx> values() { return values_; }
  std::span<const cplx> values() const { return values_; }
  std::vector<cplx>& data() { return values_; }
  const std::vector<cplx>& data() const { return values_; }

  bool is_finite() const;
  // Throws NumericalError when any sample is NaN or infinite.
  void require_finite(const char* what) const;
  bool same_grid(const ComplexField& other) const;

  ComplexField& operator+=(const ComplexField& other);
  ComplexField& operator-=(const ComplexField& other);
  ComplexField& operator*=(cplx scale);

  ComplexField conj() const;

 private:
  GridPtr grid_;
  std::vector<cplx> values_;
};

ComplexField operator+(ComplexField a, const ComplexField& b);
ComplexField operator-(ComplexField a, const ComplexField& b);
ComplexField operator*(cplx s, ComplexField a);
ComplexField operator*(ComplexField a, cplx s);

// Samples a callable f(x) on the grid.
template <class F>
ComplexField sample(const GridPtr& grid, F&& f) {
  ComplexField out(grid);
  for (int j = 0; j < grid->size(); ++j) out[j] = f(grid->node(j));
  return out;
}

// The pair (upper, lower); used for (U, conj U)-type objects.
struct VectorField {
  ComplexField upper;
  ComplexField lower;

  VectorField() = default;
  VectorField(ComplexField u, ComplexField l);
  // (u, conj u)
  static VectorField from_scalar(const ComplexField& u);
  static VectorField zeros(const GridPtr& grid);

  const Grid1D& grid() const { return upper.grid(); }
  const GridPtr& grid_ptr() const { return upper.grid_ptr(); }
  bool is_finite() const { return upper.is_finite() && lower.is_finite(); }

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(cplx s);
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(cplx s, VectorField a);

// sigma_1 (swap) and sigma_3 (negate lower) Pauli actions.
VectorField sigma1(const VectorField& f);
VectorField sigma3(const VectorField& f);

}  // namespace qnls
