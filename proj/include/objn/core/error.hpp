#pragma once

#include <stdexcept>
#include <string>

namespace objn {

// Error categories map onto CLI exit codes: config=2, data=3, runtime=4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RuntimeError : std::runtime_error {
  explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values in a numeric pipeline. A RuntimeError, but distinct so
// the training loop can tell divergence apart from plumbing failures.
struct NumericError : RuntimeError {
  explicit NumericError(const std::string& msg) : RuntimeError(msg) {}
};

}  // namespace objn
