#pragma once

#include <stdexcept>
#include <string>

namespace defectscope {

// Precondition of an operation was not met by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Argument outside the mathematical domain of a map (e.g. t <= 0 on a fibre).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The origin carries no fibre.
class SingularPointError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Requested frequency content does not fit on the lattice.
class AliasingError : public std::range_error {
 public:
  using std::range_error::range_error;
};

// Dense assembly would exceed the supported size.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Sampling region on the finite lattice is empty.
class InsufficientLattice : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Random sampling kept producing degenerate draws.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf produced during a computation, or a stability bound violated.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration rejected by the front-end.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace defectscope
