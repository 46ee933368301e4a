#pragma once

#include <stdexcept>
#include <string>

namespace chemrep {

/// Invalid user-facing parameters (mesh sizes, regularization, run config).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise unusable input data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chemrep
