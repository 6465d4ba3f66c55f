#pragma once

#include <stdexcept>
#include <string>

namespace ddpd {

// Base class for every error raised by the library. Each condition named in a
// module contract gets its own type so callers can catch selectively.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct CutoffTooLarge : Error {
  using Error::Error;
};
struct CoincidentParticles : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct NonpositiveVolume : Error {
  using Error::Error;
};
struct MissingReference : Error {
  using Error::Error;
};
struct DegenerateHeatCapacity : Error {
  using Error::Error;
};
struct TrajectoryBlowup : Error {
  using Error::Error;
};
struct NonFiniteLoss : Error {
  using Error::Error;
};
struct SingularCovariance : Error {
  using Error::Error;
};
struct InsufficientSnapshots : Error {
  using Error::Error;
};
struct MissingUnwrapData : Error {
  using Error::Error;
};
struct ZeroReference : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct InconsistentFrame : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace ddpd
