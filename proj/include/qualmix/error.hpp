#pragma once

#include <stdexcept>
#include <string>

namespace qualmix {

/// Bad input: malformed files, out-of-range values, inconsistent configuration.
/// Maps to exit code 1 at the command line.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while doing the work (I/O, trainer crash, too many failed experiments).
/// Maps to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qualmix
