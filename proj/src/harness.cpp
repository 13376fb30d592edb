#include "cle_ekf/harness.hpp"

#include "cle_ekf/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace cle_ekf::harness {

void validate(const GeneExpressionParams& p) {
  const double rates[] = {p.k_up, p.k_tx, p.k_bp, p.k_br, p.k_ur, p.k_tl, p.d_T, p.d_X, p.P_tot, p.R_tot, p.G};
  for (double r : rates) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("gene expression rates and totals must be nonnegative");
  }
  if (p.initial.size() != 4 || !p.initial.allFinite()) throw ConfigError("gene expression initial state needs 4 entries");
  if ((p.initial.array() < 0.0).any()) throw ConfigError("gene expression initial state must be nonnegative");
  if (p.initial[0] > p.P_tot) throw ConfigError("initial P_o exceeds P_tot");
  if (p.initial[2] > p.R_tot) throw ConfigError("initial R_i exceeds R_tot");
}

crn::ReactionNetwork gene_expression_model(const GeneExpressionParams& p) {
  validate(p);
  using crn::Complement;
  using crn::SpeciesValue;
  constexpr std::size_t Po = 0, T = 1, Ri = 2, X = 3;
  std::vector<crn::Reaction> reactions = {
      {p.k_bp * p.G, {SpeciesValue{Po}}},                  // w1 polymerase binding
      {p.k_up, {Complement{p.P_tot, Po}}},                 // w2 polymerase unbinding
      {p.k_tx, {Complement{p.P_tot, Po}}},                 // w3 transcription
      {p.k_br, {SpeciesValue{T}, SpeciesValue{Ri}}},       // w4 ribosome binding
      {p.k_ur, {Complement{p.R_tot, Ri}}},                 // w5 ribosome unbinding
      {p.k_tl, {Complement{p.R_tot, Ri}}},                 // w6 translation
      {p.d_T, {SpeciesValue{T}}},                          // w7 transcript decay
      {p.d_X, {SpeciesValue{X}}},                          // w8 protein decay
  };
  Eigen::MatrixXi V(4, 8);
  // clang-format off
  V << -1, 1, 1,  0, 0, 0,  0,  0,
        0, 0, 1, -1, 1, 1, -1,  0,
        0, 0, 0, -1, 1, 1,  0,  0,
        0, 0, 0,  0, 0, 1,  0, -1;
  // clang-format on
  return crn::ReactionNetwork({"P_o", "T", "R_i", "X"}, std::move(reactions), std::move(V));
}

Matrix gene_expression_measurement_matrix() {
  Matrix C = Matrix::Zero(2, 4);
  C(0, 1) = 1.0;
  C(1, 3) = 1.0;
  return C;
}

ExperimentConfig default_experiment(const GeneExpressionParams& params) {
  const Vector offset = (Vector(4) << 2.0, 5.0, -3.0, 10.0).finished();
  return ExperimentConfig{
      .model = gene_expression_model(params),
      .x0 = params.initial,
      .measurement = sim::MeasurementModel(gene_expression_measurement_matrix(),
                                           Matrix(Vector::Constant(2, 12.5).asDiagonal())),
      .x0_hat = params.initial + offset,
      .P0 = Matrix(offset.cwiseAbs2().asDiagonal()),
  };
}

std::size_t ExperimentConfig::steps() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be positive and finite");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive and finite");
  const double ratio = horizon / delta;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("horizon must be an integer multiple of delta");
  }
  return static_cast<std::size_t>(rounded);
}

RunMetrics run_single(const ExperimentConfig& config, std::size_t run) {
  const std::size_t steps = config.steps();
  const std::uint64_t seed = config.seed + run;
  const auto traj = sim::simulate_substepped(config.model, config.x0, config.delta, steps, config.truth_substeps, seed,
                                             config.process_noise);
  const auto meas = sim::measure(traj, config.measurement, seed, config.measurement_noise);

  RunMetrics out;
  out.sq_error.resize(steps + 1);
  out.p_norm.resize(steps + 1);
  out.q_norm.resize(steps + 1);
  out.sq_error[0] = (traj.states.row(0).transpose() - config.x0_hat).squaredNorm();
  out.p_norm[0] = filter::symmetric_norm(config.P0);

  const auto final_state = filter::run_streaming(
      config.model, meas, config.measurement, config.x0_hat, config.P0, config.delta,
      [&](const filter::StepRecord& rec) {
        const auto k = rec.posterior.step;
        const auto row = static_cast<Eigen::Index>(k);
        out.sq_error[k] = (traj.states.row(row).transpose() - rec.posterior.mean).squaredNorm();
        out.p_norm[k] = filter::symmetric_norm(rec.posterior.cov);
        // rec.Q was evaluated at the previous posterior.
        out.q_norm[k - 1] = filter::symmetric_norm(rec.Q);
      },
      config.filter_options);
  out.q_norm[steps] = filter::symmetric_norm(
      filter::process_noise_cov(config.model, final_state.mean, config.delta, config.filter_options.Q0));
  return out;
}

EnsembleMetrics run_experiment(const ExperimentConfig& config) {
  if (config.runs < 1) throw ConfigError("runs must be at least 1");
  const std::size_t steps = config.steps();
  std::size_t jobs = config.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.jobs;
  jobs = std::min(jobs, config.runs);

  EnsembleMetrics metrics;
  metrics.runs = config.runs;
  metrics.delta = config.delta;
  metrics.mse.assign(steps + 1, 0.0);
  metrics.p_norm.assign(steps + 1, 0.0);
  metrics.q_norm.assign(steps + 1, 0.0);

  // Runs are evaluated a batch at a time and folded into the sums in run order,
  // so the floating-point result does not depend on `jobs`.
  std::vector<RunMetrics> batch(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t first = 0; first < config.runs; first += jobs) {
    const std::size_t count = std::min(jobs, config.runs - first);
    auto work = [&](std::size_t slot) {
      try {
        batch[slot] = run_single(config, first + slot);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    };
    if (count == 1) {
      work(0);
    } else {
      std::vector<std::jthread> workers;
      workers.reserve(count);
      for (std::size_t slot = 0; slot < count; ++slot) workers.emplace_back(work, slot);
    }
    for (std::size_t slot = 0; slot < count; ++slot) {
      if (!errors[slot]) continue;
      const std::string run = "run " + std::to_string(first + slot);
      try {
        std::rethrow_exception(errors[slot]);
      } catch (const NumericalError& e) {
        throw NumericalError(run + ": " + e.what(), e.step());
      } catch (const ConfigError& e) {
        throw ConfigError(run + ": " + e.what());
      }
    }
    for (std::size_t slot = 0; slot < count; ++slot) {
      const RunMetrics& r = batch[slot];
      for (std::size_t k = 0; k <= steps; ++k) {
        metrics.mse[k] += r.sq_error[k];
        metrics.p_norm[k] += r.p_norm[k];
        metrics.q_norm[k] += r.q_norm[k];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(config.runs);
  for (std::size_t k = 0; k <= steps; ++k) {
    metrics.mse[k] *= inv;
    metrics.p_norm[k] *= inv;
    metrics.q_norm[k] *= inv;
  }
  return metrics;
}

WhitenessReport innovation_whiteness(const Matrix& innovations, std::size_t max_lag) {
  if (max_lag < 1) throw ConfigError("max_lag must be at least 1");
  const auto n = static_cast<std::size_t>(innovations.rows());
  if (n < 10 * max_lag) {
    throw ConfigError("whiteness test needs at least " + std::to_string(10 * max_lag) + " samples, got " +
                      std::to_string(n));
  }
  WhitenessReport report;
  report.samples = n;
  report.max_lag = max_lag;
  const double band = 1.96 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index c = 0; c < innovations.cols(); ++c) {
    const Vector e = innovations.col(c);
    WhitenessChannel ch;
    std::size_t inside = 0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
      const auto len = static_cast<Eigen::Index>(n - lag);
      const auto head = e.head(len);
      const auto tail = e.tail(len);
      const double denom = std::sqrt(head.squaredNorm() * tail.squaredNorm());
      const double r = denom > 0.0 ? head.dot(tail) / denom : 0.0;
      ch.autocorrelation.push_back(r);
      ch.portmanteau += r * r / static_cast<double>(n - lag);
      if (std::abs(r) <= band) ++inside;
    }
    ch.portmanteau *= static_cast<double>(n) * static_cast<double>(n + 2);
    ch.fraction_in_band = static_cast<double>(inside) / static_cast<double>(max_lag);
    report.channels.push_back(std::move(ch));
  }
  return report;
}

WhitenessReport innovation_whiteness(std::span<const filter::StepRecord> records, std::size_t max_lag) {
  if (records.empty()) throw ConfigError("whiteness test needs at least one record");
  Matrix innovations(static_cast<Eigen::Index>(records.size()), records.front().innovation.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    innovations.row(static_cast<Eigen::Index>(k)) = records[k].innovation.transpose();
  }
  return innovation_whiteness(innovations, max_lag);
}

}  // namespace cle_ekf::harness
