#pragma once

#include <stdexcept>
#include <string>

namespace robustval {

// Numerical failure (rank deficiency, breakdown diagnostics, ...) as opposed
// to a usage error. The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace robustval
