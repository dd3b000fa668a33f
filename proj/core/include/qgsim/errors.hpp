#pragma once

#include <stdexcept>
#include <string>

namespace qgsim {

// Invalid input: bad particle count, malformed config, out-of-domain value.
// The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation that cannot produce a trustworthy number (singular Fisher
// matrix, eigensolver drift). The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qgsim
