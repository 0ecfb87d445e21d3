#pragma once

#include <stdexcept>
#include <string>

namespace feig {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimension mismatch, violated preconditions, bad flags.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf input, overflow of an intermediate, or an unsupported
/// floating-point environment.
class FloatingPointError : public Error {
 public:
  using Error::Error;
};

/// Two approximate eigenvalues are too close for the correction denominators.
class ClusteredEigenvalues : public Error {
 public:
  ClusteredEigenvalues(const std::string& what, std::size_t i, std::size_t j)
      : Error(what), first(i), second(j) {}
  std::size_t first;
  std::size_t second;
};

/// An iterative kernel exceeded its iteration budget.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; `line` is 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line_no)
      : Error(what), line(line_no) {}
  std::size_t line;
};

}  // namespace feig
