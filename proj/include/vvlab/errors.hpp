#pragma once

#include <stdexcept>
#include <string>

namespace vvlab {

/// Bad or inconsistent configuration (unknown keys, unparsable values).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A run produced non-finite values. Carries the time at which it was detected.
struct BlowUpError : std::runtime_error {
  BlowUpError(const std::string& what, double time)
      : std::runtime_error(what), time(time) {}
  double time;
};

/// Least-squares or envelope fit had too few usable points.
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Characteristic inversion did not converge.
struct NewtonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vvlab
