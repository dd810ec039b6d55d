#pragma once

#include <stdexcept>
#include <string>

namespace buckle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (bad sizes, bad grid, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input file (field dump, mask, checkpoint, config).
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside a solver. `kind` separates a singular pencil
/// (degenerate mask) from running out of iterations.
class SolverError : public Error {
 public:
  enum class Kind { Factorization, NonConvergence, Divergence, EmptyDomain };

  SolverError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace buckle
