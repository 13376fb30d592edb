// cle-ekf: command-line front end for the CLE-driven extended Kalman filter.
//
// Exit codes: 0 success, 1 configuration error, 2 stability theory not
// applicable (L_f >= 1), 3 numerical failure.

#include "cle_ekf/errors.hpp"
#include "cle_ekf/filter.hpp"
#include "cle_ekf/harness.hpp"
#include "cle_ekf/io.hpp"
#include "cle_ekf/sim.hpp"
#include "cle_ekf/stability.hpp"
#include "cle_ekf/svg.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace cle_ekf;
using io::json;
namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kConfig = 1, kInfeasible = 2, kNumeric = 3 };

struct Options {
  std::string model;
  std::string params;
  std::string config;
  std::optional<double> delta;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
  std::string out = "out";
  bool plot = false;
  std::size_t jobs = 0;
};

struct LoadedConfig {
  json body = json::object();
  fs::path base = ".";
};

LoadedConfig load_config(const Options& opt) {
  LoadedConfig c;
  if (!opt.config.empty()) {
    c.body = io::read_json(opt.config);
    c.base = fs::path(opt.config).parent_path();
  }
  if (!opt.model.empty()) c.body["model"] = fs::absolute(opt.model).string();
  return c;
}

// Explicit --seed wins, then the config file, then CLE_EKF_SEED, then `fallback`.
std::uint64_t resolve_seed(const Options& opt, const json& body, std::uint64_t fallback) {
  if (opt.seed) return *opt.seed;
  if (body.contains("seed")) return body["seed"].get<std::uint64_t>();
  if (const char* env = std::getenv("CLE_EKF_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto value = std::stoull(env, &used);
      if (used == std::string(env).size()) return value;
    } catch (const std::exception&) {
    }
    throw ConfigError("CLE_EKF_SEED: expected a nonnegative integer");
  }
  return fallback;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

void prepare_out(const Options& opt) {
  std::error_code ec;
  fs::create_directories(opt.out, ec);
  if (ec || !fs::is_directory(opt.out)) throw ConfigError("cannot create output directory '" + opt.out + "'");
}

void plot(const fs::path& path, std::span<const double> values, double delta, svg::PlotLabels labels) {
  auto out = open_output(path);
  svg::write_line_plot(out, values, delta, labels);
}

int cmd_validate(const Options& opt) {
  const auto cfg = load_config(opt);
  if (!cfg.body.contains("model")) throw ConfigError("model: pass --model or a --config with a model entry");
  const auto model = io::resolve_model(cfg.body["model"], cfg.base);
  json summary = {{"species", model.species()},
                  {"reactions", model.reaction_count()},
                  {"stoichiometry_norm", crn::spectral_norm(model.V())},
                  {"propensity_clamping", "negative propensities are clamped to zero; states are not clamped"}};
  std::cout << summary.dump(2) << '\n';
  return kOk;
}

int cmd_stability(const Options& opt) {
  if (opt.params.empty()) throw ConfigError("params: pass --params <file>");
  const auto body = io::read_json(opt.params);
  const auto load = io::stability_params_from_json(body, fs::path(opt.params).parent_path());
  const bool lf_estimated =
      std::find(load.estimated_fields.begin(), load.estimated_fields.end(), "L_f") != load.estimated_fields.end();
  if (lf_estimated && !load.estimates->contractive) {
    std::cerr << "warning: estimated L_f = " << load.estimates->L_f << " is not below 1\n";
  }
  const auto report = stability::certify(load.params);
  auto j = io::stability_report_to_json(load.params, report, load.estimated_fields);
  if (load.estimates) {
    j["estimates"] = {{"L_f", load.estimates->L_f},         {"L_a", load.estimates->L_a},
                      {"C_A", load.estimates->C_A},         {"v_bound", load.estimates->v_bound},
                      {"samples", load.estimates->samples}, {"contractive", load.estimates->contractive},
                      {"inflation", stability::kBoundInflation}};
  }
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_simulate(const Options& opt) {
  auto cfg = load_config(opt);
  auto& body = cfg.body;
  const bool default_model = !body.contains("model");
  const auto model = io::resolve_model(body.value("model", json{{"gene_expression", json::object()}}), cfg.base);
  crn::Vector x0;
  if (body.contains("x0")) {
    x0 = io::vector_from_json(body["x0"], "x0");
  } else if (default_model) {
    x0 = harness::GeneExpressionParams{}.initial;
  } else if (body["model"].is_object() && body["model"].contains("gene_expression")) {
    x0 = io::gene_expression_params_from_json(body["model"]["gene_expression"]).initial;
  } else {
    throw ConfigError("x0: required for a custom model");
  }
  const double delta = opt.delta.value_or(body.value("delta", 5e-4));
  long long steps_raw = opt.steps ? static_cast<long long>(*opt.steps) : body.value("steps", 160000LL);
  if (steps_raw < 1) throw ConfigError("steps: must be at least 1");
  const auto steps = static_cast<std::size_t>(steps_raw);
  const auto substeps = body.value("truth_substeps", std::size_t{1});
  const auto seed = resolve_seed(opt, body, 1);

  std::optional<sim::MeasurementModel> measurement;
  if (body.contains("measurement")) {
    measurement = io::measurement_from_json(body["measurement"]);
  } else if (default_model) {
    measurement = harness::default_experiment().measurement;
  }

  const auto traj = sim::simulate_substepped(model, x0, delta, steps, substeps, seed);
  prepare_out(opt);
  {
    auto out = open_output(fs::path(opt.out) / "trajectory.csv");
    io::write_trajectory_csv(out, traj, model.species());
  }
  if (measurement) {
    const auto series = sim::measure(traj, *measurement, seed);
    auto out = open_output(fs::path(opt.out) / "measurements.csv");
    io::write_measurements_csv(out, series, delta);
  }
  if (opt.plot) {
    for (std::size_t i = 0; i < model.species_count(); ++i) {
      std::vector<double> column(traj.states.rows());
      for (Eigen::Index k = 0; k < traj.states.rows(); ++k) column[k] = traj.states(k, static_cast<Eigen::Index>(i));
      plot(fs::path(opt.out) / ("trajectory_" + model.species()[i] + ".svg"), column, delta,
           {model.species()[i] + " trajectory", "t", model.species()[i]});
    }
  }
  return kOk;
}

int cmd_filter(const Options& opt) {
  auto cfg = load_config(opt);
  auto& body = cfg.body;
  const auto model = io::resolve_model(body.value("model", json{{"gene_expression", json::object()}}), cfg.base);
  if (!body.contains("measurements")) throw ConfigError("measurements: path to a measurement CSV is required");
  fs::path csv = body["measurements"].get<std::string>();
  if (csv.is_relative()) csv = cfg.base / csv;
  std::ifstream in(csv);
  if (!in) throw ConfigError("measurements: cannot open '" + csv.string() + "'");
  const auto series = io::read_measurements_csv(in);

  const auto measurement = body.contains("measurement") ? io::measurement_from_json(body["measurement"])
                                                         : harness::default_experiment().measurement;
  const double delta = opt.delta.value_or(body.value("delta", 5e-4));
  if (!body.contains("filter")) throw ConfigError("filter: x0_hat and P0 are required");
  const auto& f = body["filter"];
  if (!f.contains("x0_hat")) throw ConfigError("filter.x0_hat: missing");
  if (!f.contains("P0")) throw ConfigError("filter.P0: missing");
  filter::FilterOptions options;
  if (f.contains("Q0")) options.Q0 = io::matrix_from_json(f["Q0"], "filter.Q0");
  if (f.value("jacobian", std::string("analytic")) == "finite_difference") {
    options.jacobian = filter::JacobianSource::finite_difference;
  }

  prepare_out(opt);
  auto out = open_output(fs::path(opt.out) / "filter.csv");
  io::FilterCsvWriter writer(out, model.species_count(), measurement.outputs(), delta);
  const bool dump = body.value("dump_records", false);
  std::vector<filter::StepRecord> records;
  std::vector<double> p_norm;
  filter::run_streaming(
      model, series, measurement, io::vector_from_json(f["x0_hat"], "filter.x0_hat"),
      io::matrix_from_json(f["P0"], "filter.P0"), delta,
      [&](const filter::StepRecord& rec) {
        writer.write(rec);
        if (dump) records.push_back(rec);
        if (opt.plot) p_norm.push_back(filter::symmetric_norm(rec.posterior.cov));
      },
      options);
  if (dump) {
    std::ofstream bin(fs::path(opt.out) / "records.bin", std::ios::binary);
    if (!bin) throw ConfigError("cannot write records.bin");
    io::write_records_binary(bin, records);
  }
  if (opt.plot) plot(fs::path(opt.out) / "p_norm.svg", p_norm, delta, {"Posterior covariance norm", "t", "||P+||"});
  return kOk;
}

double final_quarter_cv(const std::vector<double>& v) {
  const std::size_t q = std::max<std::size_t>(1, v.size() / 4);
  double mean = 0.0;
  for (std::size_t k = v.size() - q; k < v.size(); ++k) mean += v[k];
  mean /= static_cast<double>(q);
  double var = 0.0;
  for (std::size_t k = v.size() - q; k < v.size(); ++k) var += (v[k] - mean) * (v[k] - mean);
  return std::sqrt(var / static_cast<double>(q)) / mean;
}

int cmd_experiment(const Options& opt) {
  auto cfg = load_config(opt);
  auto& body = cfg.body;
  if (opt.delta) body["delta"] = *opt.delta;
  if (opt.horizon) body["horizon"] = *opt.horizon;
  if (opt.runs) body["runs"] = *opt.runs;
  body["seed"] = resolve_seed(opt, body, 1);
  auto config = io::experiment_from_json(body, cfg.base);
  config.jobs = opt.jobs;

  const auto metrics = harness::run_experiment(config);
  prepare_out(opt);
  const fs::path out_dir = opt.out;
  {
    auto out = open_output(out_dir / "mse_norm.csv");
    io::write_series_csv(out, metrics.mse, metrics.delta);
  }
  {
    auto out = open_output(out_dir / "p_norm.csv");
    io::write_series_csv(out, metrics.p_norm, metrics.delta);
  }
  {
    auto out = open_output(out_dir / "q_norm.csv");
    io::write_series_csv(out, metrics.q_norm, metrics.delta);
  }
  {
    auto echo = io::experiment_to_json(config);
    if (body.contains("stability")) echo["stability"] = body["stability"];
    auto out = open_output(out_dir / "config_echo.json");
    out << echo.dump(2) << '\n';
  }

  json summary = {{"runs", metrics.runs}, {"delta", metrics.delta}, {"steps", metrics.mse.size() - 1}};
  summary["q_norm_final_quarter_cv"] = final_quarter_cv(metrics.q_norm);
  if (body.contains("stability")) {
    const auto load = io::stability_params_from_json(body["stability"], cfg.base);
    const double g = stability::gamma(load.params, config.delta);
    const double dmax = stability::delta_max(load.params);
    summary["delta_max"] = dmax;
    summary["gamma"] = g;
    if (g > 0.0 && g < 1.0) {
      const auto check = stability::check_exponential_bound(metrics.mse, g);
      summary["bound_check"] = {{"satisfied", check.satisfied},
                                {"C0", check.C0},
                                {"empirical_gamma", std::isfinite(check.empirical_gamma) ? json(check.empirical_gamma)
                                                                                         : json(nullptr)},
                                {"transient_length", check.transient_length}};
    } else {
      summary["bound_check"] = nullptr;
      std::cerr << "warning: delta = " << config.delta << " is not below delta_max = " << dmax << '\n';
    }
  }
  {
    auto out = open_output(out_dir / "summary.json");
    out << summary.dump(2) << '\n';
  }
  if (opt.plot) {
    plot(out_dir / "mse_norm.svg", metrics.mse, metrics.delta, {"Mean square filter error norm", "t", "E||e_k||^2"});
    plot(out_dir / "p_norm.svg", metrics.p_norm, metrics.delta, {"Posterior error covariance norm", "t", "||P_k+||"});
    plot(out_dir / "q_norm.svg", metrics.q_norm, metrics.delta, {"Process noise covariance norm", "t", "||Q_k||"});
  }
  std::cout << summary.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended Kalman filtering for reaction networks with CLE-derived process noise"};
  app.require_subcommand(1);
  Options opt;

  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    sub->add_flag("--plot", opt.plot, "Also write SVG line plots");
  };

  auto* validate = app.add_subcommand("validate", "Check a reaction-network model file and print a summary");
  validate->add_option("--model", opt.model, "Model JSON file");
  validate->add_option("--config", opt.config, "Config JSON whose 'model' entry is checked");

  auto* stability_cmd = app.add_subcommand("stability", "Compute the stability polynomial and delta_max");
  stability_cmd->add_option("--params", opt.params, "Stability parameters JSON")->required();

  auto* simulate = app.add_subcommand("simulate", "Euler-Maruyama CLE simulation with optional measurements");
  simulate->add_option("--config", opt.config, "Simulation config JSON");
  simulate->add_option("--model", opt.model, "Model JSON file (overrides the config's model)");
  simulate->add_option("--delta", opt.delta, "Time step");
  simulate->add_option("--steps", opt.steps, "Number of steps");
  simulate->add_option("--seed", opt.seed, "Random seed (fallback: CLE_EKF_SEED)");
  add_out(simulate);

  auto* filter_cmd = app.add_subcommand("filter", "Run the EKF over a measurement CSV");
  filter_cmd->add_option("--config", opt.config, "Filter config JSON")->required();
  filter_cmd->add_option("--model", opt.model, "Model JSON file (overrides the config's model)");
  filter_cmd->add_option("--delta", opt.delta, "Time step");
  add_out(filter_cmd);

  auto* experiment = app.add_subcommand("experiment", "Monte Carlo simulate -> measure -> filter ensemble");
  experiment->add_option("--config", opt.config, "Experiment config JSON (defaults: gene expression)");
  experiment->add_option("--model", opt.model, "Model JSON file (overrides the config's model)");
  experiment->add_option("--delta", opt.delta, "Time step");
  experiment->add_option("--horizon", opt.horizon, "Simulated time span");
  experiment->add_option("--runs", opt.runs, "Ensemble size");
  experiment->add_option("--seed", opt.seed, "Base random seed (fallback: CLE_EKF_SEED)");
  experiment->add_option("--jobs", opt.jobs, "Worker threads, 0 = logical cores (results do not depend on it)")
      ->capture_default_str();
  add_out(experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*validate) return cmd_validate(opt);
    if (*stability_cmd) return cmd_stability(opt);
    if (*simulate) return cmd_simulate(opt);
    if (*filter_cmd) return cmd_filter(opt);
    if (*experiment) return cmd_experiment(opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const io::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kConfig;
}
