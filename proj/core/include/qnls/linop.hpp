#pragma once

#include <Eigen/Dense>
#include <array>

#include "qnls/grid.hpp"

namespace qnls {

// Scalar Schrodinger operators around the ground state phi0 = phi0(., 1):
//   L_- = -d^2 + 1 - phi0^4,   L_+ = -d^2 + 1 - 5 phi0^4.
class ScalarOperator {
 public:
  ScalarOperator(GridPtr grid, double potential_weight);
  ComplexField apply(const ComplexField& f) const;
  const GridPtr& grid() const { return grid_; }

 private:
  GridPtr grid_;
  std::vector<double> potential_;  // weight * phi0^4
};

struct LOperators {
  ScalarOperator minus;
  ScalarOperator plus;
};

// Throws UsageError when the grid does not resolve phi0 (L < 30).
LOperators build_L_operators(const GridPtr& grid);

// Potential switch for the matrix operator; Free drops every phi0^4 term
// (the zero-potential control H_0).
enum class Potential { Soliton, Free };

// The linearized operator
//   H = [[ d^2 - 1 + 3 phi0^4,   2 phi0^4           ],
//        [ -2 phi0^4,            -d^2 + 1 - 3 phi0^4 ]]
// and its adjoint H* (off-diagonal signs flipped), applied matrix-free.
class HOperator {
 public:
  explicit HOperator(GridPtr grid, Potential potential = Potential::Soliton);

  VectorField apply(const VectorField& f) const;
  VectorField apply_adjoint(const VectorField& f) const;

  // Dense 2n x 2n real matrices (upper block first); n <= 2048 only.
  Eigen::MatrixXd dense() const;
  Eigen::MatrixXd dense_adjoint() const;

  const GridPtr& grid() const { return grid_; }
  Potential potential() const { return potential_kind_; }
  // phi0^4 samples (zero for the free operator).
  std::span<const double> quartic() const { return quartic_; }

 private:
  Eigen::MatrixXd dense_impl(double off_diagonal_sign) const;
  VectorField apply_impl(const VectorField& f, double off_diagonal_sign) const;

  GridPtr grid_;
  Potential potential_kind_;
  std::vector<double> quartic_;
};

VectorField apply_H(const HOperator& H, const VectorField& f);
VectorField apply_H_star(const HOperator& H, const VectorField& f);

// Even, decaying solution of L_+ rho = x^2 phi0. Throws NumericalError when
// the Krylov solve does not converge.
ComplexField solve_rho(const GridPtr& grid);

using Gram = Eigen::Matrix<cplx, 6, 6>;
using RootCoefficients = std::array<cplx, 6>;

// Generalized root spaces of H (eta) and H* (xi), index 0..5 for modes 1..6.
struct RootSpaceBasis {
  GridPtr grid;
  std::array<VectorField, 6> eta;
  std::array<VectorField, 6> xi;
  ComplexField rho;
  double kappa1 = 0.0;  // <phi0, phi0>
  double kappa2 = 0.0;  // <rho, phi0>
  double kappa3 = 0.0;  // <x^2 phi0, rho>
};

RootSpaceBasis root_basis(const GridPtr& grid);

// G(i, j) = <eta_{i+1}, xi_{j+1}>.
Gram gram_table(const RootSpaceBasis& basis);

// Expected table in terms of the kappa constants.
Gram expected_gram_table(double kappa1, double kappa2, double kappa3);

struct Projection {
  RootCoefficients lambda{};
  VectorField dispersive;
};

// Root coefficients from the pairings b_j = <f, xi_j>: solves
// sum_i lambda_i G(i, j) = b_j. Throws NumericalError when G is singular.
RootCoefficients coefficients_from_pairings(const Gram& gram, const RootCoefficients& pairings);

// f = sum lambda_i eta_i + f_dis with <f_dis, xi_j> = 0 for every j.
Projection project(const VectorField& f, const RootSpaceBasis& basis);
VectorField root_part(const Projection& p, const RootSpaceBasis& basis);

struct SpectrumReport {
  int near_zero_count = 0;
  int restricted_rank = 0;
  int geometric_multiplicity = 0;
  bool spectral_gap_ok = false;
  double threshold = 0.0;          // cluster cutoff on |lambda|
  double cluster_separation = 0.0;  // |lambda_{k+1}| / |lambda_k| at the cutoff
  double min_abs_real_outside = 0.0;
  double operator_norm = 0.0;
  std::vector<double> cluster_singular_values;
  std::vector<cplx> smallest_eigenvalues;  // sorted by modulus, up to 12
};

// Dense eigen-analysis of H (n <= 2048). tol_edge bounds how far the
// non-cluster spectrum may fall inside |Re lambda| = 1.
SpectrumReport spectrum_check(const HOperator& H, double tol_edge = 0.02);

}  // namespace qnls
