#pragma once

#include <stdexcept>
#include <string>

namespace qnls {

// Bad input: invalid parameters, malformed configs, mismatched grids.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation that was set up correctly but could not be carried out:
// non-convergence, corrupted (non-finite) state, blow-up guards.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public UsageError {
 public:
  GridMismatch() : UsageError("fields live on different grids") {}
};

}  // namespace qnls
