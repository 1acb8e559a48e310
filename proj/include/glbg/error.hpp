#pragma once

#include <stdexcept>
#include <string>

namespace glbg {

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when the state becomes non-finite; `time` is diffusive time.
struct IntegratorDiverged : std::runtime_error {
  IntegratorDiverged(const std::string& what, double t)
      : std::runtime_error(what + " (t=" + std::to_string(t) + ")"), time(t) {}
  double time;
};

struct UnsupportedPotential : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The rejection envelope fell below the target density: a bug, not bad luck.
struct EnvelopeViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct MixingWarning : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidObservable : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidChain : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidCurve : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace glbg
