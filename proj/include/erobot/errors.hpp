#pragma once

#include <stdexcept>
#include <string>

namespace erobot {

// Precondition violations (bad shapes, non-positive parameters, malformed
// weights) are reported with std::invalid_argument. NumericalError covers
// failures that only show up while iterating: overflow, underflowing
// kernels, too many non-converged solves in a Monte-Carlo harness.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace erobot
