#pragma once

#include <stdexcept>
#include <string>

namespace otb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied an argument outside the operation's domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Marginal with a non-positive entry or a density that is not positive definite.
class PositivityError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Malformed instance file or unparsable input.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Floating point breakdown: eigen-iteration failure, singular KKT system, underflow.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Iterative method exhausted its budget.
class NotConverged : public Error {
 public:
  using Error::Error;
};

/// A step left the barrier domain although theory says it cannot.
class DomainExit : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// An internal consistency check failed; indicates a bug.
class AssertionFailure : public Error {
 public:
  using Error::Error;
};

inline void check(bool condition, const std::string& what) {
  if (!condition) throw AssertionFailure(what);
}

}  // namespace otb
