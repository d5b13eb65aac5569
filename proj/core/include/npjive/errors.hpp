#pragma once

#include <stdexcept>

namespace npjive {

// Bad inputs: malformed files, dimension mismatches, violated call contracts.
// The CLI maps this family to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures: indefinite systems after regularization, solves that do
// not reach stationarity, non-convergent quadrature. CLI exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace npjive
