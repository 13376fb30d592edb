#pragma once

#include "cle_ekf/crn.hpp"
#include "cle_ekf/filter.hpp"
#include "cle_ekf/harness.hpp"
#include "cle_ekf/sim.hpp"
#include "cle_ekf/stability.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cle_ekf::io {

using nlohmann::json;
namespace fs = std::filesystem;

json read_json(const fs::path& path);

// Reaction network model files.
crn::ReactionNetwork model_from_json(const json& j);
json model_to_json(const crn::ReactionNetwork& crn);

/// A model reference: a path (resolved against `base`), an inline model, or
/// {"gene_expression": {...rate overrides}}.
crn::ReactionNetwork resolve_model(const json& ref, const fs::path& base);

harness::GeneExpressionParams gene_expression_params_from_json(const json& j);

sim::MeasurementModel measurement_from_json(const json& j);

struct ParamsLoad {
  stability::StabilityParams params;
  std::vector<std::string> estimated_fields;
  std::optional<stability::BoundEstimates> estimates;
};

/// Stability parameters. Fields listed under "estimate" may be omitted and are
/// then filled by stability::estimate_bounds.
ParamsLoad stability_params_from_json(const json& j, const fs::path& base);
json stability_params_to_json(const stability::StabilityParams& p);
json stability_report_to_json(const stability::StabilityParams& p, const stability::StabilityReport& report,
                              const std::vector<std::string>& estimated_fields);

/// Experiment configuration; absent fields take harness::default_experiment values.
harness::ExperimentConfig experiment_from_json(const json& j, const fs::path& base);
json experiment_to_json(const harness::ExperimentConfig& config);

Eigen::MatrixXd matrix_from_json(const json& j, const char* field);
Eigen::VectorXd vector_from_json(const json& j, const char* field);
json to_json(const Eigen::MatrixXd& m);
json to_json(const Eigen::VectorXd& v);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

// CSV outputs. Time column is k * delta.
void write_trajectory_csv(std::ostream& out, const sim::Trajectory& traj, const std::vector<std::string>& species);
void write_measurements_csv(std::ostream& out, const sim::MeasurementSeries& series, double delta);
void write_series_csv(std::ostream& out, std::span<const double> values, double delta);

/// Reads a `t,y1..yp` table written by write_measurements_csv.
sim::MeasurementSeries read_measurements_csv(std::istream& in);

/// Streams one `k,t,xhat_1..n,trace_P,norm_P,norm_Q,innov_1..p` row per filter step.
class FilterCsvWriter {
 public:
  FilterCsvWriter(std::ostream& out, std::size_t n, std::size_t p, double delta);
  void write(const filter::StepRecord& rec);

 private:
  std::ostream& out_;
  double delta_;
};

/**
 * Binary dump of full filter records, little-endian:
 *   header: 8-byte magic "CLEEKF01", u32 n, u32 p, u64 record count
 *   record: u64 k, f64 prior_mean[n], prior_cov[n*n], Q[n*n], F[n*n],
 *           gain[n*p], innovation[p], posterior_mean[n], posterior_cov[n*n]
 * Matrices are row-major.
 */
void write_records_binary(std::ostream& out, std::span<const filter::StepRecord> records);
std::vector<filter::StepRecord> read_records_binary(std::istream& in);

}  // namespace cle_ekf::io
