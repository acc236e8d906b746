#pragma once

#include <stdexcept>
#include <string>

namespace privperturb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical kernel failed (non-convergence, non-finite data).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A structural assumption on the system does not hold (for example the
/// pencil cannot have full row rank, or the pair is not controllable).
class AssumptionError : public Error {
 public:
  using Error::Error;
};

/// The requested rank target cannot be met by any perturbation.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace privperturb
