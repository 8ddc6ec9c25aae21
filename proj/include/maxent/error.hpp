#pragma once

#include <stdexcept>
#include <string>

namespace maxent {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (dimension mismatch, bad bounds, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The requested constraints cannot be satisfied by any distribution on the support.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// The model uses a feature/family combination that no backend can evaluate.
class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure (Newton solve, adaptive quadrature) did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace maxent
