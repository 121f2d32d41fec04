#pragma once

#include <stdexcept>
#include <string>

namespace vplan {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor/layer dimension mismatches.
struct ShapeError : Error {
  using Error::Error;
};

// Invariant violations in domain objects (scenarios, trajectories, configs).
struct ValidationError : Error {
  using Error::Error;
};

// Bad magic/version/truncation in binary files; message carries the byte offset.
struct FormatError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Non-finite values in a forward pass or a diverged simulation.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace vplan
