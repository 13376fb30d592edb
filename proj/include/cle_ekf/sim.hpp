#pragma once

#include "cle_ekf/crn.hpp"

#include <cstdint>

namespace cle_ekf::sim {

using crn::Matrix;
using crn::Vector;

/// Test hooks. Real use leaves both defaults.
struct NoiseOptions {
  bool enabled = true;
};

/// Euler-Maruyama CLE trajectory. Row k holds the state at time k * delta.
struct Trajectory {
  double delta = 0.0;
  Matrix states;  // (steps + 1) x n
  std::uint64_t seed = 0;

  std::size_t steps() const noexcept { return states.rows() > 0 ? static_cast<std::size_t>(states.rows() - 1) : 0; }
};

/// Linear Gaussian measurement y = C x + v, v ~ N(0, R).
class MeasurementModel {
 public:
  /// Validates shapes, symmetry and positive definiteness of R.
  MeasurementModel(Matrix C, Matrix R);

  const Matrix& C() const noexcept { return C_; }
  const Matrix& R() const noexcept { return R_; }
  /// Lower Cholesky factor of R.
  const Matrix& R_factor() const noexcept { return R_chol_; }
  std::size_t outputs() const noexcept { return static_cast<std::size_t>(C_.rows()); }
  std::size_t states() const noexcept { return static_cast<std::size_t>(C_.cols()); }

  /// Throws ConfigError unless lower <= ||R|| <= upper.
  void check_noise_bounds(double lower, double upper) const;

 private:
  Matrix C_;
  Matrix R_;
  Matrix R_chol_;
};

/// Row k - 1 holds y_k, the measurement of trajectory state k (k >= 1).
struct MeasurementSeries {
  Matrix values;  // steps x p
  std::uint64_t seed = 0;
};

/**
 * Integrates x_{k+1} = drift(x_k) + diffusion(x_k) w_k with w_k ~ N(0, I_m)
 * drawn from the counter-based generator keyed by (seed, k, reaction).
 *
 * States are never clamped; only propensities are. Throws NumericalError
 * naming the step if the state leaves the finite range.
 */
Trajectory simulate(const crn::ReactionNetwork& crn, const Vector& x0, double delta, std::size_t steps,
                    std::uint64_t seed, NoiseOptions noise = {});

/// Same as simulate, but integrates with delta / substeps and keeps every substeps-th state.
Trajectory simulate_substepped(const crn::ReactionNetwork& crn, const Vector& x0, double delta,
                               std::size_t steps, std::size_t substeps, std::uint64_t seed,
                               NoiseOptions noise = {});

MeasurementSeries measure(const Trajectory& traj, const MeasurementModel& model, std::uint64_t seed,
                          NoiseOptions noise = {});

/// The single Euler-Maruyama step used by simulate, exposed for increment statistics.
Vector em_step(const crn::ReactionNetwork& crn, const Vector& x, double delta, const Vector& w);

}  // namespace cle_ekf::sim
