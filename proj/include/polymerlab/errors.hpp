#pragma once

#include <stdexcept>
#include <string>

namespace polymerlab {

/// Invalid parameter: unsupported dimension, family parameter out of range,
/// malformed configuration value.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation
/// (unreachable lattice site, depth too large, moment undefined).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A lattice box or table would exceed its configured budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested accuracy is not reachable within the configured table size.
class PrecisionError : public std::runtime_error {
 public:
  PrecisionError(const std::string& what, double achievable)
      : std::runtime_error(what), achievable_(achievable) {}
  double achievable() const noexcept { return achievable_; }

 private:
  double achievable_;
};

}  // namespace polymerlab
