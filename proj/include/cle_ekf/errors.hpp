#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cle_ekf {

/// Invalid input: malformed configuration, dimension mismatch, violated precondition.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The stability bound theory does not apply to the supplied parameters (L_f >= 1).
class InfeasibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t step = -1)
      : std::runtime_error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what),
        step_(step) {}

  /// Step index at which the failure occurred, or -1 when not step-bound.
  std::ptrdiff_t step() const noexcept { return step_; }

 private:
  std::ptrdiff_t step_;
};

}  // namespace cle_ekf
