#pragma once

#include <stdexcept>
#include <string>

namespace trapclock {

// Caller broke a documented precondition (wrong dimension, non-neighbor pair,
// empty sample budget, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A query ran past the simulated range; the horizon must be enlarged.
class RangeExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a closed-form function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Scale sequences too small to form the requested number of blocks.
class DegenerateScale : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration rejected before any simulation work starts.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Per-trajectory event cap hit.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

}  // namespace trapclock
