#pragma once
#include <stdexcept>
#include <string>

namespace ringspdc {

// Config parsing / validation problems; the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runtime computation problems (exit code 3).
struct ComputationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotGuidedError : ComputationError {
  using ComputationError::ComputationError;
};

struct ResolutionError : ComputationError {
  using ComputationError::ComputationError;
};

}  // namespace ringspdc
