#pragma once

#include "cle_ekf/crn.hpp"
#include "cle_ekf/filter.hpp"
#include "cle_ekf/sim.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cle_ekf::harness {

using crn::Matrix;
using crn::Vector;

/**
 * Basic gene expression: free RNA polymerase P_o, transcript T, free ribosome
 * R_i and protein X.
 *
 * The default rate constants are NOT literature values. They are chosen so the
 * deterministic steady state (P_o, T, R_i, X) = (5, 25, 24, 80) is interior to
 * the physical box and every channel fires at a rate of order one per second.
 */
struct GeneExpressionParams {
  double k_up = 0.5;
  double k_tx = 0.5;
  double k_bp = 1.0;
  double k_br = 0.01;
  double k_ur = 0.2;
  double k_tl = 0.8;
  double d_T = 0.1;
  double d_X = 0.06;
  double P_tot = 10.0;
  double R_tot = 30.0;
  double G = 1.0;  ///< Inducer level, held constant.
  Vector initial = (Vector(4) << 5.0, 25.0, 24.0, 80.0).finished();
};

/// Species order P_o, T, R_i, X; channels w1..w8.
crn::ReactionNetwork gene_expression_model(const GeneExpressionParams& params);

/// Throws ConfigError when a rate is negative or the initial state violates a conservation bound.
void validate(const GeneExpressionParams& params);

/// Measurement matrix selecting T and X.
Matrix gene_expression_measurement_matrix();

struct ExperimentConfig {
  crn::ReactionNetwork model;
  Vector x0;  ///< True initial state.
  double delta = 5e-4;
  double horizon = 80.0;
  std::size_t runs = 100;
  std::uint64_t seed = 1;
  /// Truth is integrated with delta / truth_substeps; the filter always uses delta.
  std::size_t truth_substeps = 1;
  sim::MeasurementModel measurement;
  Vector x0_hat;
  Matrix P0;
  filter::FilterOptions filter_options;
  /// Test hooks.
  sim::NoiseOptions process_noise;
  sim::NoiseOptions measurement_noise;
  /// Worker threads; 0 selects the number of logical cores. Does not affect results.
  std::size_t jobs = 0;

  /// horizon / delta rounded to the nearest integer; throws if not integral within 1e-9 relative.
  std::size_t steps() const;
};

/// Gene-expression experiment with default rates, C selecting (T, X), R = diag(12.5, 12.5),
/// and a filter started off-truth at xhat_0 = x0 + (2, 5, -3, 10), P0 = diag(4, 25, 9, 100).
ExperimentConfig default_experiment(const GeneExpressionParams& params = {});

/// Ensemble means indexed by step k = 0..steps; entry 0 is the initial condition.
struct EnsembleMetrics {
  std::vector<double> mse;     ///< mean ||x_k - xhat_k+||^2
  std::vector<double> p_norm;  ///< mean ||P_k+||
  std::vector<double> q_norm;  ///< mean ||Q_k||; entry 0 is Q evaluated at xhat_0
  std::size_t runs = 0;
  double delta = 0.0;
};

/// Per-run series, same layout as EnsembleMetrics.
struct RunMetrics {
  std::vector<double> sq_error;
  std::vector<double> p_norm;
  std::vector<double> q_norm;
};

/// One simulate -> measure -> filter pass with seed base + run.
RunMetrics run_single(const ExperimentConfig& config, std::size_t run);

/**
 * Runs the ensemble, possibly on several threads. Per-run series are added in
 * run-index order, so the result is bit-identical for any worker count.
 * A failing run aborts the experiment with NumericalError naming the run.
 */
EnsembleMetrics run_experiment(const ExperimentConfig& config);

struct WhitenessChannel {
  std::vector<double> autocorrelation;  ///< lags 1..max_lag
  double portmanteau = 0.0;             ///< Ljung-Box statistic
  double fraction_in_band = 0.0;        ///< share of lags within +-1.96 / sqrt(N)
};

struct WhitenessReport {
  std::vector<WhitenessChannel> channels;
  std::size_t samples = 0;
  std::size_t max_lag = 0;
};

/// Whiteness diagnostics of an innovation sequence (rows = time, columns = channels).
/// Correlations are uncentered and normalized by the overlapping energies, so a
/// constant nonzero sequence has autocorrelation exactly one.
WhitenessReport innovation_whiteness(const Matrix& innovations, std::size_t max_lag);
WhitenessReport innovation_whiteness(std::span<const filter::StepRecord> records, std::size_t max_lag);

}  // namespace cle_ekf::harness
