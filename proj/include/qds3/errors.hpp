#pragma once

#include <stdexcept>
#include <string>

namespace qds3 {

/// Input lies outside the region where a formula is defined.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Input sits on a degenerate point of a parametrisation (e.g. isotropic couplings).
struct DegenerateError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Two constructions that should agree do not, beyond the accepted tolerance.
struct MismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated by the caller.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A configured size limit (Hilbert-space dimension, mode count) was exceeded.
struct CapacityError : std::length_error {
  using std::length_error::length_error;
};

/// The Krylov propagator could not reach its local error target.
struct StepFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qds3
