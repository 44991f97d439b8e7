#pragma once

#include <stdexcept>
#include <string>

namespace morita {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called on inputs that violate its preconditions
/// (mismatched parents, non-positive metrics, non-imprimitivity inputs, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Numerical trouble the caller cannot fix by changing a parameter, e.g. an
/// ambiguous joint-eigenvalue separation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized input.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace morita
