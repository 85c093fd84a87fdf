#pragma once

#include <stdexcept>
#include <string>

namespace levylse {

/// Invalid input: out-of-range parameters, malformed configs, parameters
/// outside the box. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical precondition failed at run time (singular normal equations,
/// information matrix not positive definite, exploding path). Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, double witness = 0.0)
      : std::runtime_error(what), witness_(witness) {}

  /// Diagnostic number attached to the failure: a condition estimate,
  /// a minimum eigenvalue, or the offending magnitude.
  double witness() const noexcept { return witness_; }

 private:
  double witness_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace levylse
