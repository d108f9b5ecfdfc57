#pragma once

#include <stdexcept>
#include <string>

namespace fracdtn {

/// Bad user input: grid sizes, shape containment, config schema, dimension
/// mismatches. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// The scenario violates the eigenvalue condition (zero is an eigenvalue of
/// the constrained interior operator) and the solver refuses to run.
/// Maps to CLI exit code 3.
class IllPosedError : public std::runtime_error {
 public:
  explicit IllPosedError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical machinery broke down: eigensolver failure, negative spectrum
/// where none is admissible, diverging quadrature. Maps to CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fracdtn
