#pragma once

#include <stdexcept>
#include <string>

namespace dff {

/// Bad input data, configuration, or file content. The CLI maps it to exit status 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (divergence, degenerate least-squares systems). Exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dff
