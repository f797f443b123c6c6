#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eot {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (negative mass,
/// zero marginal entry, mismatched dimensions, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An exponential left the representable range of double.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// A solver could not make progress in floating point.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// A runtime-checked convergence inequality did not hold.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Desk-scale guard of the exact solver.
class RefusalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace eot
