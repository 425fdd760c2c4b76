#pragma once

#include <stdexcept>
#include <string>

namespace fbh {

// Exit codes used by the CLI dispatcher.
enum ExitCode : int {
  exit_ok = 0,
  exit_config_error = 2,
  exit_numerical_error = 3,
  exit_probe_failure = 4,
};

/// Invalid configuration or precondition violation (exit code 2).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-convergence, indefinite covariance, series blow-up (exit code 3).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// A requested capability is not available for the given inputs.
class CapabilityError : public std::runtime_error {
public:
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fbh
