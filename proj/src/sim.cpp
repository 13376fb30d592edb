#include "cle_ekf/sim.hpp"

#include "cle_ekf/errors.hpp"
#include "cle_ekf/rng.hpp"

#include <algorithm>
#include <cmath>

namespace cle_ekf::sim {

MeasurementModel::MeasurementModel(Matrix C, Matrix R) : C_(std::move(C)), R_(std::move(R)) {
  if (C_.rows() == 0 || C_.cols() == 0) throw ConfigError("measurement matrix C must be nonempty");
  if (R_.rows() != C_.rows() || R_.cols() != C_.rows()) {
    throw ConfigError("measurement covariance R must be " + std::to_string(C_.rows()) + "x" +
                      std::to_string(C_.rows()));
  }
  if (!C_.allFinite() || !R_.allFinite()) throw ConfigError("measurement model has non-finite entries");
  if ((R_ - R_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, R_.cwiseAbs().maxCoeff())) {
    throw ConfigError("measurement covariance R must be symmetric");
  }
  Eigen::LLT<Matrix> llt(R_);
  if (llt.info() != Eigen::Success) throw ConfigError("measurement covariance R must be positive definite");
  R_chol_ = llt.matrixL();
}

void MeasurementModel::check_noise_bounds(double lower, double upper) const {
  const double norm = crn::spectral_norm(R_);
  if (norm < lower || norm > upper) {
    throw ConfigError("||R|| = " + std::to_string(norm) + " outside declared bounds [" + std::to_string(lower) +
                      ", " + std::to_string(upper) + "]");
  }
}

Vector em_step(const crn::ReactionNetwork& crn, const Vector& x, double delta, const Vector& w) {
  const Vector a = crn::propensities(crn, x);
  // Kept in the same operation order as crn::drift so that w = 0 reproduces it bit for bit.
  const Vector noise = (std::sqrt(delta) * a.cwiseSqrt()).cwiseProduct(w);
  return x + delta * (crn.V() * a) + crn.V() * noise;
}

Trajectory simulate_substepped(const crn::ReactionNetwork& crn, const Vector& x0, double delta,
                               std::size_t steps, std::size_t substeps, std::uint64_t seed, NoiseOptions noise) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("time step must be positive and finite");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (substeps < 1) throw ConfigError("substeps must be at least 1");
  if (static_cast<std::size_t>(x0.size()) != crn.species_count()) {
    throw ConfigError("initial state has wrong dimension");
  }
  if (!x0.allFinite()) throw ConfigError("initial state must be finite");

  const rng::NormalSource source(seed, rng::Stream::process);
  const auto m = static_cast<Eigen::Index>(crn.reaction_count());
  const double h = delta / static_cast<double>(substeps);

  Trajectory traj;
  traj.delta = delta;
  traj.seed = seed;
  traj.states.resize(static_cast<Eigen::Index>(steps + 1), x0.size());
  traj.states.row(0) = x0.transpose();

  Vector x = x0;
  Vector w = Vector::Zero(m);
  std::uint64_t counter = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t s = 0; s < substeps; ++s, ++counter) {
      if (noise.enabled) {
        for (Eigen::Index j = 0; j < m; ++j) w[j] = source.normal(counter, static_cast<std::uint32_t>(j));
      }
      x = em_step(crn, x, h, w);
      if (!x.allFinite()) throw NumericalError("non-finite state in simulation", static_cast<std::ptrdiff_t>(k + 1));
    }
    traj.states.row(static_cast<Eigen::Index>(k + 1)) = x.transpose();
  }
  return traj;
}

Trajectory simulate(const crn::ReactionNetwork& crn, const Vector& x0, double delta, std::size_t steps,
                    std::uint64_t seed, NoiseOptions noise) {
  return simulate_substepped(crn, x0, delta, steps, 1, seed, noise);
}

MeasurementSeries measure(const Trajectory& traj, const MeasurementModel& model, std::uint64_t seed,
                          NoiseOptions noise) {
  if (static_cast<std::size_t>(traj.states.cols()) != model.states()) {
    throw ConfigError("measurement matrix has " + std::to_string(model.states()) + " columns, trajectory has " +
                      std::to_string(traj.states.cols()) + " species");
  }
  const rng::NormalSource source(seed, rng::Stream::measurement);
  const auto p = static_cast<Eigen::Index>(model.outputs());
  const auto steps = static_cast<Eigen::Index>(traj.steps());

  MeasurementSeries series;
  series.seed = seed;
  series.values.resize(steps, p);
  Vector v = Vector::Zero(p);
  for (Eigen::Index k = 1; k <= steps; ++k) {
    if (noise.enabled) {
      for (Eigen::Index i = 0; i < p; ++i) v[i] = source.normal(static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(i));
    }
    series.values.row(k - 1) = (model.C() * traj.states.row(k).transpose() + model.R_factor() * v).transpose();
  }
  if (!series.values.allFinite()) throw NumericalError("non-finite measurement");
  return series;
}

}  // namespace cle_ekf::sim
