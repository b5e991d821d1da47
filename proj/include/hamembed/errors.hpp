#pragma once

#include <stdexcept>
#include <string>

namespace hamembed {

/// Bad input: wrong dimensions, invalid configuration, unsupported request.
/// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation ran but failed numerically (non-convergence, non-finite
/// values, rejection-sampling starvation). The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hamembed
