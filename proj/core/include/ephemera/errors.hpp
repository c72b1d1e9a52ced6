#pragma once

#include <stdexcept>
#include <string>

namespace ephemera {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: truncated binaries, unparsable lines, bad JSON.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input whose values break a domain invariant (l <= 0, reflected
/// rotation, duplicate ids, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A precondition the caller is responsible for was not met.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input that is valid but carries no usable signal for the requested stage,
/// e.g. an aggregation window that selects no scans.
class DataError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant failed; indicates a bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ephemera
