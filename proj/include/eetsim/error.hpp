#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace eetsim {

/// Thrown when caller-supplied data violates a documented precondition.
/// `field()` names the offending configuration key or argument when known.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what, std::string field = {})
      : std::invalid_argument(what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// The integration step is too coarse for the requested jump rates.
class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical integration lost trace or hermiticity beyond tolerance.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eetsim
