#pragma once

#include "cle_ekf/crn.hpp"
#include "cle_ekf/sim.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace cle_ekf::filter {

using crn::Matrix;
using crn::Vector;

/// Posterior estimate after step `step`.
struct FilterState {
  Vector mean;
  Matrix cov;
  std::size_t step = 0;
};

struct Prediction {
  Vector mean;
  Matrix cov;
  Matrix F;
  Matrix Q;
};

/// Everything computed in one predict/correct cycle.
struct StepRecord {
  Vector prior_mean;
  Matrix prior_cov;
  Matrix Q;
  Matrix F;
  Matrix gain;
  Vector innovation;
  FilterState posterior;
};

enum class JacobianSource {
  analytic,
  finite_difference,
};

struct FilterOptions {
  /// Covariance of the reaction noise w_k; identity when unset.
  std::optional<Matrix> Q0;
  JacobianSource jacobian = JacobianSource::analytic;
};

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
double symmetric_norm(const Matrix& s);

/// Q = delta * V * diag(a(estimate)) * V^T, or G Q0 G^T when Q0 is given.
Matrix process_noise_cov(const crn::ReactionNetwork& crn, const Vector& estimate, double delta,
                         const std::optional<Matrix>& Q0 = std::nullopt);

/// F = I + delta * V * dA/dx evaluated at `estimate`.
Matrix transition_jacobian(const crn::ReactionNetwork& crn, const Vector& estimate, double delta,
                           JacobianSource source = JacobianSource::analytic);

Prediction predict(const FilterState& state, const crn::ReactionNetwork& crn, double delta,
                   const FilterOptions& options = {});

/**
 * Measurement update in innovation form:
 *   K = P- C^T (C P- C^T + R)^-1,  P+ = (I - K C) P-  (symmetrized).
 * The result satisfies K = P+ C^T R^-1 up to rounding.
 * Throws NumericalError if the innovation covariance is not positive definite.
 */
StepRecord correct(const Vector& prior_mean, const Matrix& prior_cov, const Vector& y,
                   const sim::MeasurementModel& model);

/// The information-form gain P+ C^T R^-1, used to cross-check correct().
Matrix information_gain(const Matrix& posterior_cov, const sim::MeasurementModel& model);

/// Called once per step; the record is only valid for the duration of the call.
using StepObserver = std::function<void(const StepRecord&)>;

/// Runs predict/correct over every measurement row, handing each record to `observer`.
/// Returns the final state. Errors carry the failing step index.
FilterState run_streaming(const crn::ReactionNetwork& crn, const sim::MeasurementSeries& measurements,
                          const sim::MeasurementModel& model, const Vector& x0, const Matrix& P0, double delta,
                          const StepObserver& observer, const FilterOptions& options = {});

std::vector<StepRecord> run(const crn::ReactionNetwork& crn, const sim::MeasurementSeries& measurements,
                            const sim::MeasurementModel& model, const Vector& x0, const Matrix& P0, double delta,
                            const FilterOptions& options = {});

}  // namespace cle_ekf::filter
