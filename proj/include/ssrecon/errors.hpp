#pragma once

#include <stdexcept>
#include <string>

namespace ssrecon {

/// Vector or mask lengths that do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inputs that violate a documented precondition (non-PD covariance,
/// mask conditions, alpha = 0, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unattainable configuration. The message starts with the
/// offending field path when one exists.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ssrecon
