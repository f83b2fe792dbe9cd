#pragma once

#include <stdexcept>

namespace ppush {

/// Tensor shapes or parameter layouts that do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was invoked in the wrong lifecycle state (e.g. backward with
/// no loss on the tape, a second join on the same event).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Reference to a particle id, device or hook that does not exist.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Invalid user-supplied configuration value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ppush
