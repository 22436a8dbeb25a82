#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qnls/evolve.hpp"
#include "qnls/grid.hpp"
#include "qnls/linop.hpp"
#include "qnls/soliton.hpp"

namespace qnls {

// Modulation parameters pi = (lambda, beta, mu, omega, gamma) of
//   W = e^{i Psi} sqrt(lambda) phi0(z),  z = lambda (x - mu),
//   Psi = gamma + omega z - (beta / 4) z^2.
struct ModParams {
  double lambda = 1.0;
  double beta = 0.0;
  double mu = 0.0;
  double omega = 0.0;
  double gamma = 0.0;
  double t = 0.0;

  // Throws UsageError unless lambda > 0 and every entry is finite.
  void validate() const;
  std::array<double, 5> as_array() const { return {lambda, beta, mu, omega, gamma}; }
  static ModParams from_array(const std::array<double, 5>& a, double t = 0.0);
};

// Parameters of the radiation-free modulated soliton at time t:
// lambda = 1/(a+bt), beta = -b(a+bt), omega = v(a+bt), mu = 2tv + mu0,
// gamma = -1/(b(a+bt)) + v^2 t + v mu0 + gamma0.
ModParams exact_params(const ExactWaveParams& p, double t);

ComplexField build_W(const ModParams& params, const GridPtr& grid);

// Root-mode profiles evaluated at arbitrary points: closed forms for the
// phi0-based modes, a quintic B-spline of the computed rho for the sixth.
class ProfileSet {
 public:
  explicit ProfileSet(const RootSpaceBasis& basis);

  // a_i(z) and a_i'(z) for the real profiles phi0, g, phi0', z phi0,
  // z^2 phi0, rho (index 0..5).
  void evaluate(double z, std::array<double, 6>& value, std::array<double, 6>& slope) const;

  const RootSpaceBasis& basis() const { return *basis_; }
  // Gram table of the proper basis (used to read off root coefficients).
  const Gram& gram() const { return gram_; }

 private:
  std::shared_ptr<const RootSpaceBasis> basis_;
  Gram gram_;
  struct Splines;
  std::shared_ptr<const Splines> splines_;
};

// xi_i(t, x) = diag(e^{i Psi}, e^{-i Psi}) sqrt(lambda) xi_{i,proper}(lambda (x - mu)),
// and the same twist of the eta family.
std::array<VectorField, 6> build_xi_family(const ModParams& params, const ProfileSet& profiles,
                                           const GridPtr& grid);
std::array<VectorField, 6> build_eta_family(const ModParams& params, const ProfileSet& profiles,
                                            const GridPtr& grid);

struct DecompositionOptions {
  double tolerance = 1e-10;  // on ||F|| / ||psi||
  int max_iterations = 50;
  int max_halvings = 8;
  double lambda_min = 1e-6;
  double lambda_max = 1e6;
};

struct DecompositionResult {
  ModParams params;
  ComplexField R;
  RootCoefficients root_coeffs{};
  // F_i = <(R, conj R), xi_i(pi)> for i = 2..6 (real by construction).
  std::array<double, 5> residuals{};
  VectorField dispersive;  // (R, conj R) minus its twisted root part
  int iterations = 0;
  double jacobian_condition = 0.0;
};

// Newton solve of the five orthogonality conditions with the analytic
// Jacobian. Throws NumericalError on divergence or when lambda leaves
// [lambda_min, lambda_max].
DecompositionResult decompose(const ComplexField& psi, double t, const ModParams& guess,
                              const ProfileSet& profiles, const DecompositionOptions& options = {});

// The five conditions and their Jacobian (rows: conditions 2..6, columns:
// lambda, beta, mu, omega, gamma).
std::array<double, 5> orthogonality_conditions(const ComplexField& psi, const ModParams& params,
                                               const ProfileSet& profiles);
Eigen::Matrix<double, 5, 5> orthogonality_jacobian(const ComplexField& psi, const ModParams& params,
                                                   const ProfileSet& profiles);

struct TrackPoint {
  double t = 0.0;
  std::optional<DecompositionResult> result;
  std::string error;  // set when decompose failed at this snapshot
};

// Warm-started decomposition along a trajectory; gamma is unwrapped for
// continuity between consecutive successes.
std::vector<TrackPoint> track(const Trajectory& traj, const ModParams& first_guess,
                              const ProfileSet& profiles, const DecompositionOptions& options = {});

struct ConsistencyPoint {
  double t = 0.0;
  double lambda = 0.0;
  // lambda'/lambda - beta lambda^2, beta' + lambda^2 beta^2, mu' - 2 lambda omega,
  // omega' + beta lambda^2 omega, gamma' - lambda^2 - lambda^2 omega^2
  std::array<double, 5> residuals{};
};

// Finite differences (five-point where available) over runs of consecutive
// successes. Throws NumericalError when no three consecutive successes exist.
std::vector<ConsistencyPoint> consistency_residuals(const std::vector<TrackPoint>& series);

enum class RateClass { Nongeneric, Undetermined };
std::string to_string(RateClass c);

struct RateReport {
  RateClass verdict = RateClass::Undetermined;
  double c_inverse = 0.0;  // lambda = c / (T - t)
  double T_inverse = 0.0;
  double residual_inverse = 0.0;  // rms of log lambda misfit
  double c_sqrt = 0.0;  // lambda = c / sqrt(T - t)
  double T_sqrt = 0.0;
  double residual_sqrt = 0.0;
  double dynamic_range = 0.0;
  double T_reference = 0.0;
  int points = 0;
};

// Compares lambda = c/(T-t) against lambda = c/sqrt(T-t) (T fitted in both).
// Nongeneric when the first misfit is below a quarter of the second;
// otherwise Undetermined. Throws NumericalError "insufficient dynamic range"
// when max/min lambda is below one decade (1% slack in log10), and
// UsageError for fewer than 20 points or non-increasing lambda.
RateReport classify_rate(const std::vector<double>& times, const std::vector<double>& lambdas,
                         double T_est);

}  // namespace qnls
