#pragma once

#include <stdexcept>
#include <string>

namespace ccrn {

/// Argument outside the mathematical domain of an operation (bad probability, empty set, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A model or rate point violates the standing assumptions of a region formula.
class PreconditionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration (JSON, flags, unreachable simulation phase).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A receiver was expected to hold a packet it cannot reconstruct. Always a bookkeeping bug.
class DecodeError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

}  // namespace ccrn
