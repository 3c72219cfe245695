#pragma once

#include <stdexcept>
#include <string>

namespace rebot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violation on a public operation (bad rotation matrix,
/// non-positive radius, dimension mismatch, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The integrator produced a non-finite quantity.
class SimulationDiverged : public Error {
 public:
  SimulationDiverged(const std::string& what, long step_index)
      : Error(what + " (step " + std::to_string(step_index) + ")"), step_index(step_index) {}
  long step_index;
};

/// A PPO update produced a non-finite loss.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, long iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration(iteration) {}
  long iteration;
};

/// An API contract was broken by the caller (e.g. stepping a finished episode).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  enum class Code { kBadMagic, kBadVersion, kDimensionMismatch, kIo };
  CheckpointError(Code code, const std::string& what) : Error(what), code(code) {}
  Code code;
};

}  // namespace rebot
