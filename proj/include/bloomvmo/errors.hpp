#pragma once

#include <stdexcept>
#include <string>

namespace bloomvmo {

/// A cube, cell or box does not lie inside the grid domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An input violates a documented precondition (bad exponent, empty set, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A structural invariant failed to hold. Indicates a bad input object or a
/// construction bug; the CLI maps it to exit code 2.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Unknown operator, diagnostic or generator name.
class UnknownNameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace bloomvmo
