#include "cle_ekf/filter.hpp"

#include "cle_ekf/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cle_ekf::filter {

namespace {

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

Matrix finite_difference_jacobian(const crn::ReactionNetwork& crn, const Vector& x, double delta) {
  const auto n = x.size();
  Matrix jac(n, n);
  Vector probe = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const Vector up = crn::drift(crn, probe, delta);
    probe[i] = x[i] - h;
    const Vector down = crn::drift(crn, probe, delta);
    probe[i] = x[i];
    jac.col(i) = (up - down) / (2.0 * h);
  }
  return jac;
}

}  // namespace

double symmetric_norm(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix process_noise_cov(const crn::ReactionNetwork& crn, const Vector& estimate, double delta,
                         const std::optional<Matrix>& Q0) {
  if (!(delta > 0.0)) throw ConfigError("time step must be positive");
  if (Q0) {
    const auto m = static_cast<Eigen::Index>(crn.reaction_count());
    if (Q0->rows() != m || Q0->cols() != m) throw ConfigError("Q0 must be m x m");
    const Matrix G = crn::diffusion(crn, estimate, delta);
    Matrix q = G * (*Q0) * G.transpose();
    symmetrize(q);
    return q;
  }
  const Vector a = crn::propensities(crn, estimate);
  Matrix q = delta * (crn.V() * a.asDiagonal() * crn.V().transpose());
  symmetrize(q);
  return q;
}

Matrix transition_jacobian(const crn::ReactionNetwork& crn, const Vector& estimate, double delta,
                           JacobianSource source) {
  if (source == JacobianSource::finite_difference) return finite_difference_jacobian(crn, estimate, delta);
  const auto n = estimate.size();
  return Matrix::Identity(n, n) + delta * (crn.V() * crn::propensity_jacobian(crn, estimate));
}

Prediction predict(const FilterState& state, const crn::ReactionNetwork& crn, double delta,
                   const FilterOptions& options) {
  const auto n = static_cast<Eigen::Index>(crn.species_count());
  if (state.mean.size() != n || state.cov.rows() != n || state.cov.cols() != n) {
    throw ConfigError("filter state dimension does not match the network");
  }
  Prediction out;
  out.mean = crn::drift(crn, state.mean, delta);
  out.F = transition_jacobian(crn, state.mean, delta, options.jacobian);
  out.Q = process_noise_cov(crn, state.mean, delta, options.Q0);
  out.cov = out.F * state.cov * out.F.transpose() + out.Q;
  symmetrize(out.cov);
  if (!out.mean.allFinite() || !out.cov.allFinite()) {
    throw NumericalError("non-finite prediction", static_cast<std::ptrdiff_t>(state.step + 1));
  }
  return out;
}

StepRecord correct(const Vector& prior_mean, const Matrix& prior_cov, const Vector& y,
                   const sim::MeasurementModel& model) {
  const Matrix& C = model.C();
  if (prior_mean.size() != C.cols() || prior_cov.rows() != C.cols() || prior_cov.cols() != C.cols()) {
    throw ConfigError("prior dimension does not match the measurement matrix");
  }
  if (y.size() != C.rows()) throw ConfigError("measurement has wrong dimension");

  Matrix S = C * prior_cov * C.transpose() + model.R();
  symmetrize(S);
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance is not invertible");

  StepRecord rec;
  rec.prior_mean = prior_mean;
  rec.prior_cov = prior_cov;
  rec.innovation = y - C * prior_mean;
  // K = P C^T S^-1, solved as S K^T = C P.
  rec.gain = llt.solve(C * prior_cov).transpose();
  rec.posterior.mean = prior_mean + rec.gain * rec.innovation;
  const auto n = prior_cov.rows();
  rec.posterior.cov = (Matrix::Identity(n, n) - rec.gain * C) * prior_cov;
  symmetrize(rec.posterior.cov);
  if (!rec.posterior.mean.allFinite() || !rec.posterior.cov.allFinite()) {
    throw NumericalError("non-finite correction");
  }
  return rec;
}

Matrix information_gain(const Matrix& posterior_cov, const sim::MeasurementModel& model) {
  const Eigen::LLT<Matrix> llt(model.R());
  return llt.solve(model.C() * posterior_cov).transpose();
}

FilterState run_streaming(const crn::ReactionNetwork& crn, const sim::MeasurementSeries& measurements,
                          const sim::MeasurementModel& model, const Vector& x0, const Matrix& P0, double delta,
                          const StepObserver& observer, const FilterOptions& options) {
  const auto n = static_cast<Eigen::Index>(crn.species_count());
  if (!(delta > 0.0)) throw ConfigError("time step must be positive");
  if (x0.size() != n) throw ConfigError("initial estimate has wrong dimension");
  if (P0.rows() != n || P0.cols() != n) throw ConfigError("initial covariance has wrong dimension");
  if (static_cast<Eigen::Index>(model.states()) != n) throw ConfigError("measurement matrix has wrong column count");
  if (measurements.values.rows() > 0 && measurements.values.cols() != static_cast<Eigen::Index>(model.outputs())) {
    throw ConfigError("measurement series has wrong column count");
  }
  if (!x0.allFinite() || !P0.allFinite()) throw ConfigError("initial estimate must be finite");

  FilterState state{x0, 0.5 * (P0 + P0.transpose()), 0};
  for (Eigen::Index row = 0; row < measurements.values.rows(); ++row) {
    const auto step = static_cast<std::ptrdiff_t>(row + 1);
    try {
      Prediction pred = predict(state, crn, delta, options);
      StepRecord rec = correct(pred.mean, pred.cov, measurements.values.row(row).transpose(), model);
      rec.F = std::move(pred.F);
      rec.Q = std::move(pred.Q);
      rec.posterior.step = static_cast<std::size_t>(step);
      if (observer) observer(rec);
      state = std::move(rec.posterior);
    } catch (const NumericalError& e) {
      if (e.step() >= 0) throw;
      throw NumericalError(e.what(), step);
    }
  }
  return state;
}

std::vector<StepRecord> run(const crn::ReactionNetwork& crn, const sim::MeasurementSeries& measurements,
                            const sim::MeasurementModel& model, const Vector& x0, const Matrix& P0, double delta,
                            const FilterOptions& options) {
  std::vector<StepRecord> records;
  records.reserve(static_cast<std::size_t>(measurements.values.rows()));
  run_streaming(
      crn, measurements, model, x0, P0, delta, [&](const StepRecord& r) { records.push_back(r); }, options);
  return records;
}

}  // namespace cle_ekf::filter
