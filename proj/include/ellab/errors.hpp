#pragma once

#include <stdexcept>
#include <string>

namespace ellab {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Domain,      // argument outside the mathematical domain (theta <= 0, ...)
  Argument,    // malformed request (empty box, size mismatch, ...)
  Config,      // parse or validation failure of a run configuration
  Solver,      // iterative solver did not converge
  BlowUp,      // non-finite value during time stepping
  Positivity,  // temperature left (0, inf)
  Model,       // coefficient violates a model requirement (gamma <= 0, ...)
  Singular,    // singular symbol or matrix
  Structure,   // unexpected spectral structure (stable dimension, ...)
  Property,    // an asserted property failed
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by time stepping; carries the last time at which the state was valid.
class StepError : public Error {
 public:
  StepError(ErrorKind kind, const std::string& what, double last_valid_time)
      : Error(kind, what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

}  // namespace ellab
