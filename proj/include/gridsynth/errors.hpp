#pragma once

#include <stdexcept>
#include <string>

namespace gridsynth {

// Every failure the library reports maps onto one of these categories; the
// CLI turns them into exit codes (2, 3, 4).
enum class ErrorKind { Validation, Infeasible, Invariant };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad input data or configuration.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

/// An optimization model has no feasible solution.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(ErrorKind::Infeasible, what) {}
};

/// A post-condition the construction guarantees did not hold.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(ErrorKind::Invariant, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return 2;
    case ErrorKind::Infeasible: return 3;
    case ErrorKind::Invariant: return 4;
  }
  return 4;
}

}  // namespace gridsynth
