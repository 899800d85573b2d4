#pragma once

#include <stdexcept>
#include <string>

namespace degreeflow {

/// Runtime failure inside a simulation or solver.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace degreeflow
