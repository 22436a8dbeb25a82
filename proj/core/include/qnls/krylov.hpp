#pragma once

#include <functional>
#include <span>

#include "qnls/grid.hpp"

namespace qnls {

using LinearOperator = std::function<void(std::span<const cplx> in, std::span<cplx> out)>;

struct GmresResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

// Restarted GMRES(m) with Givens rotations. x holds the initial guess on
// entry and the solution on return.
GmresResult gmres(const LinearOperator& op, std::span<const cplx> rhs, std::span<cplx> x,
                  double tolerance, int restart = 60, int max_iterations = 2000);

}  // namespace qnls
