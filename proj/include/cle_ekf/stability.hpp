#pragma once

#include "cle_ekf/crn.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cle_ekf::stability {

/// System bounds entering the mean-square stability analysis.
struct StabilityParams {
  double L_f = 0.0;      ///< Lipschitz constant of the drift map; must be < 1.
  double L_a = 0.0;      ///< Lipschitz constant of the propensity vector.
  double v_bound = 0.0;  ///< Bound on ||V||.
  double C_A = 0.0;      ///< Bound on ||A(x)||.
  double r_lb = 0.0;     ///< Lower bound on ||R||.
  double r_ub = 0.0;     ///< Upper bound on ||R||.
  double c_bound = 0.0;  ///< Bound on ||C||.
  int m = 0;             ///< Reaction count.
  int p = 0;             ///< Measurement count.
  std::optional<double> m1;
  std::optional<double> m2;
  // Only enter the offset term, never delta_max.
  std::optional<double> m3;
  std::optional<double> m4;
};

struct DerivedConstants {
  double rho = 0.0;    ///< c_bound / r_lb
  double r_s = 0.0;    ///< r_ub / r_lb
  double beta0 = 0.0;  ///< v^2 L_a
  double beta1 = 0.0;  ///< v^2 C_A / (1 - L_f^2)
  double beta = 0.0;   ///< beta0 rho c
  double c2 = 0.0;     ///< beta1 rho c
};

/// Cubic coefficients in descending order: a3, a2, a1, a0.
using Coefficients = std::array<double, 4>;

struct StabilityReport {
  Coefficients coefficients{};
  double delta_max = 0.0;
  std::array<int, 4> sign_pattern{};
};

/// Validates params; throws InfeasibleError if L_f >= 1, ConfigError for other violations.
void validate(const StabilityParams& params);

DerivedConstants derive_constants(const StabilityParams& params);

/// Coefficients of the contraction polynomial gamma(delta) - 1. Requires m1 and m2.
Coefficients polynomial_coefficients(const StabilityParams& params);

double evaluate(const Coefficients& c, double delta) noexcept;

std::array<int, 4> sign_pattern(const Coefficients& c) noexcept;
/// Number of sign changes, ignoring zero coefficients.
int sign_changes(const Coefficients& c) noexcept;

/// Unique positive root by bracketed bisection to 1e-9 relative width.
/// Throws InfeasibleError unless the coefficients show exactly one sign change with a0 < 0.
double positive_root(const Coefficients& c);

double delta_max(const StabilityParams& params);

/// Mean-square contraction factor gamma(delta) = 1 + a3 d^3 + a2 d^2 + a1 d + a0.
double gamma(const StabilityParams& params, double delta);

StabilityReport certify(const StabilityParams& params);

/// Bounds estimated by sampling a box of states.
struct BoundEstimates {
  double L_f = 0.0;
  double L_a = 0.0;
  double C_A = 0.0;
  double v_bound = 0.0;
  std::size_t samples = 0;
  /// False when the L_f estimate is >= 1; the stability bound then does not apply.
  bool contractive = false;
};

inline constexpr double kBoundInflation = 1.05;

/**
 * Numerical instantiation of the Lipschitz and propensity bounds.
 *
 * Evaluates every box corner (for up to 16 species) plus `samples` uniform
 * draws, takes suprema of ||I + delta V dA/dx||, ||dA/dx|| and ||A(x)||,
 * and inflates each by kBoundInflation. v_bound is the exact ||V||.
 */
BoundEstimates estimate_bounds(const crn::ReactionNetwork& crn, std::span<const std::pair<double, double>> box,
                               double delta, std::size_t samples, std::uint64_t seed);

struct BoundCheck {
  double empirical_gamma = 0.0;  ///< NaN when the transient has fewer than two points.
  double C0 = 0.0;
  bool satisfied = false;
  std::size_t transient_length = 0;
};

/**
 * Diagnostic check of exponential mean-square boundedness with C1 = 1.
 *
 * C0 is the smallest offset with mse_k <= gamma^k mse_0 + C0 for all k.
 * The empirical rate is a log-linear fit of the decreasing upper envelope
 * over the transient, which ends where the series first falls below 1.05x
 * its final-quarter mean. `satisfied` requires C0 finite and the final-quarter
 * maximum to stay under the bound evaluated at the start of that quarter.
 */
BoundCheck check_exponential_bound(std::span<const double> mse, double gamma);

}  // namespace cle_ekf::stability
