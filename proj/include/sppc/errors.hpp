#pragma once

#include <stdexcept>
#include <string>

namespace sppc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition (non-SPD weight, bad size, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be invertible is numerically singular.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A controller design violates one of its internal-consistency checks.
class DesignError : public Error {
 public:
  using Error::Error;
};

/// The buffered-actuator protocol cannot proceed (buffer exhausted, no packet yet).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace sppc
