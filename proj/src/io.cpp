#include "cle_ekf/io.hpp"

#include "cle_ekf/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace cle_ekf::io {

namespace {

double number(const json& j, const char* field) {
  if (!j.contains(field)) throw ConfigError(std::string(field) + ": missing");
  const auto& v = j.at(field);
  if (!v.is_number()) throw ConfigError(std::string(field) + ": expected a number");
  return v.get<double>();
}

std::optional<double> optional_number(const json& j, const char* field) {
  if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
  return number(j, field);
}

std::uint64_t unsigned_integer(const json& j, const char* field) {
  if (!j.contains(field)) throw ConfigError(std::string(field) + ": missing");
  const auto& v = j.at(field);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(std::string(field) + ": expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

int integer(const json& j, const char* field) {
  if (!j.contains(field)) throw ConfigError(std::string(field) + ": missing");
  const auto& v = j.at(field);
  if (!v.is_number_integer()) throw ConfigError(std::string(field) + ": expected an integer");
  return v.get<int>();
}

}  // namespace

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(field) + ": expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw ConfigError(std::string(field) + ": expected a nonempty array of rows");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(std::string(field) + ": rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ConfigError(std::string(field) + ": entries must be numbers");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(field) + ": expected a nonempty array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(field) + ": entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

crn::ReactionNetwork model_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model: expected an object");
  if (!j.contains("species") || !j["species"].is_array()) throw ConfigError("species: expected an array of names");
  if (!j.contains("reactions") || !j["reactions"].is_array()) throw ConfigError("reactions: expected an array");

  std::vector<std::string> species;
  for (const auto& s : j["species"]) {
    if (!s.is_string()) throw ConfigError("species: names must be strings");
    species.push_back(s.get<std::string>());
  }
  auto lookup = [&](const json& name, const std::string& where) -> std::size_t {
    if (!name.is_string()) throw ConfigError(where + ": species reference must be a string");
    const auto it = std::find(species.begin(), species.end(), name.get<std::string>());
    if (it == species.end()) throw ConfigError(where + ": unknown species '" + name.get<std::string>() + "'");
    return static_cast<std::size_t>(it - species.begin());
  };

  const auto& rj = j["reactions"];
  std::vector<crn::Reaction> reactions;
  Eigen::MatrixXi V = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(species.size()),
                                            static_cast<Eigen::Index>(rj.size()));
  for (std::size_t r = 0; r < rj.size(); ++r) {
    const std::string where = "reactions[" + std::to_string(r) + "]";
    const auto& entry = rj[r];
    if (!entry.is_object()) throw ConfigError(where + ": expected an object");
    crn::Reaction reaction;
    try {
      reaction.coefficient = number(entry, "coefficient");
    } catch (const ConfigError& e) {
      throw ConfigError(where + "." + e.what());
    }
    if (entry.contains("factors")) {
      if (!entry["factors"].is_array()) throw ConfigError(where + ".factors: expected an array");
      for (const auto& f : entry["factors"]) {
        if (f.contains("species")) {
          reaction.factors.emplace_back(crn::SpeciesValue{lookup(f["species"], where + ".factors")});
        } else if (f.contains("complement")) {
          const auto& c = f["complement"];
          double total = 0.0;
          try {
            total = number(c, "total");
          } catch (const ConfigError& e) {
            throw ConfigError(where + ".factors.complement." + e.what());
          }
          reaction.factors.emplace_back(crn::Complement{total, lookup(c.value("species", json()), where + ".factors")});
        } else {
          throw ConfigError(where + ".factors: each factor needs 'species' or 'complement'");
        }
      }
    }
    if (!entry.contains("stoichiometry") || !entry["stoichiometry"].is_object()) {
      throw ConfigError(where + ".stoichiometry: expected an object of species -> integer");
    }
    for (const auto& [name, change] : entry["stoichiometry"].items()) {
      if (!change.is_number_integer()) throw ConfigError(where + ".stoichiometry." + name + ": expected an integer");
      V(static_cast<Eigen::Index>(lookup(json(name), where + ".stoichiometry")), static_cast<Eigen::Index>(r)) =
          change.get<int>();
    }
    reactions.push_back(std::move(reaction));
  }
  return crn::ReactionNetwork(std::move(species), std::move(reactions), std::move(V));
}

json model_to_json(const crn::ReactionNetwork& crn) {
  json out;
  out["species"] = crn.species();
  out["reactions"] = json::array();
  const auto& names = crn.species();
  for (std::size_t r = 0; r < crn.reaction_count(); ++r) {
    const auto& reaction = crn.reactions()[r];
    json entry;
    entry["coefficient"] = reaction.coefficient;
    entry["factors"] = json::array();
    for (const auto& f : reaction.factors) {
      if (const auto* c = std::get_if<crn::Complement>(&f)) {
        entry["factors"].push_back({{"complement", {{"total", c->total}, {"species", names[c->index]}}}});
      } else {
        entry["factors"].push_back({{"species", names[crn::factor_index(f)]}});
      }
    }
    entry["stoichiometry"] = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
      const int change = crn.stoichiometry()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r));
      if (change != 0) entry["stoichiometry"][names[i]] = change;
    }
    out["reactions"].push_back(std::move(entry));
  }
  return out;
}

harness::GeneExpressionParams gene_expression_params_from_json(const json& j) {
  harness::GeneExpressionParams p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw ConfigError("gene_expression: expected an object");
  static const std::set<std::string> known = {"k_up", "k_tx", "k_bp", "k_br", "k_ur", "k_tl",
                                              "d_T",  "d_X",  "P_tot", "R_tot", "G",  "initial"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("gene_expression." + key + ": unknown field");
  }
  auto set = [&](const char* field, double& target) {
    if (j.contains(field)) target = number(j, field);
  };
  set("k_up", p.k_up);
  set("k_tx", p.k_tx);
  set("k_bp", p.k_bp);
  set("k_br", p.k_br);
  set("k_ur", p.k_ur);
  set("k_tl", p.k_tl);
  set("d_T", p.d_T);
  set("d_X", p.d_X);
  set("P_tot", p.P_tot);
  set("R_tot", p.R_tot);
  set("G", p.G);
  if (j.contains("initial")) p.initial = vector_from_json(j["initial"], "gene_expression.initial");
  harness::validate(p);
  return p;
}

crn::ReactionNetwork resolve_model(const json& ref, const fs::path& base) {
  if (ref.is_string()) {
    const fs::path path = fs::path(ref.get<std::string>()).is_absolute() ? fs::path(ref.get<std::string>())
                                                                       : base / ref.get<std::string>();
    return model_from_json(read_json(path));
  }
  if (ref.is_object() && ref.contains("gene_expression")) {
    return harness::gene_expression_model(gene_expression_params_from_json(ref["gene_expression"]));
  }
  return model_from_json(ref);
}

sim::MeasurementModel measurement_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("measurement: expected an object with C and R");
  if (!j.contains("C")) throw ConfigError("measurement.C: missing");
  if (!j.contains("R")) throw ConfigError("measurement.R: missing");
  return sim::MeasurementModel(matrix_from_json(j["C"], "measurement.C"), matrix_from_json(j["R"], "measurement.R"));
}

ParamsLoad stability_params_from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw ConfigError("params: expected an object");
  ParamsLoad load;
  auto& p = load.params;

  if (j.contains("estimate")) {
    const auto& e = j["estimate"];
    if (!e.is_object()) throw ConfigError("estimate: expected an object");
    const auto model = resolve_model(e.value("model", json{{"gene_expression", json::object()}}), base);
    if (!e.contains("box")) throw ConfigError("estimate.box: missing");
    const auto box_matrix = matrix_from_json(e["box"], "estimate.box");
    if (box_matrix.cols() != 2) throw ConfigError("estimate.box: expected [lo, hi] pairs");
    std::vector<std::pair<double, double>> box;
    for (Eigen::Index i = 0; i < box_matrix.rows(); ++i) box.emplace_back(box_matrix(i, 0), box_matrix(i, 1));
    const auto samples = e.contains("samples") ? unsigned_integer(e, "samples") : 10000;
    const auto seed = e.contains("seed") ? unsigned_integer(e, "seed") : 0;
    load.estimates = stability::estimate_bounds(model, box, number(e, "delta"), samples, seed);
    if (!j.contains("m")) {
      p.m = static_cast<int>(model.reaction_count());
      load.estimated_fields.push_back("m");
    }
  }

  auto fill = [&](const char* field, double& target, double estimate) {
    if (j.contains(field)) {
      target = number(j, field);
    } else if (load.estimates) {
      target = estimate;
      load.estimated_fields.emplace_back(field);
    } else {
      throw ConfigError(std::string(field) + ": missing");
    }
  };
  const auto est = load.estimates.value_or(stability::BoundEstimates{});
  fill("L_f", p.L_f, est.L_f);
  fill("L_a", p.L_a, est.L_a);
  fill("v_bound", p.v_bound, est.v_bound);
  fill("C_A", p.C_A, est.C_A);
  p.r_lb = number(j, "r_lb");
  p.r_ub = number(j, "r_ub");
  p.c_bound = number(j, "c_bound");
  if (j.contains("m") || !load.estimates) p.m = integer(j, "m");
  p.p = integer(j, "p");
  p.m1 = optional_number(j, "m1");
  p.m2 = optional_number(j, "m2");
  p.m3 = optional_number(j, "m3");
  p.m4 = optional_number(j, "m4");
  return load;
}

json stability_params_to_json(const stability::StabilityParams& p) {
  json j = {{"L_f", p.L_f},         {"L_a", p.L_a},         {"v_bound", p.v_bound}, {"C_A", p.C_A},
            {"r_lb", p.r_lb},       {"r_ub", p.r_ub},       {"c_bound", p.c_bound}, {"m", p.m},
            {"p", p.p}};
  auto opt = [&](const char* key, const std::optional<double>& v) { j[key] = v ? json(*v) : json(nullptr); };
  opt("m1", p.m1);
  opt("m2", p.m2);
  opt("m3", p.m3);
  opt("m4", p.m4);
  return j;
}

json stability_report_to_json(const stability::StabilityParams& p, const stability::StabilityReport& report,
                              const std::vector<std::string>& estimated_fields) {
  json j;
  j["coefficients"] = report.coefficients;
  j["sign_pattern"] = report.sign_pattern;
  j["delta_max"] = report.delta_max;
  j["gamma_at"] = {{"0", stability::gamma(p, 0.0)}, {"delta_max", stability::gamma(p, report.delta_max)}};
  j["inputs"] = stability_params_to_json(p);
  j["estimated_fields"] = estimated_fields;
  return j;
}

harness::ExperimentConfig experiment_from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw ConfigError("config: expected an object");
  const bool custom_model = j.contains("model") && !(j["model"].is_object() && j["model"].contains("gene_expression"));
  harness::GeneExpressionParams ge;
  if (j.contains("model") && !custom_model) ge = gene_expression_params_from_json(j["model"]["gene_expression"]);
  auto config = harness::default_experiment(ge);
  if (custom_model) {
    config.model = resolve_model(j["model"], base);
    for (const char* field : {"x0", "measurement"}) {
      if (!j.contains(field)) throw ConfigError(std::string(field) + ": required for a custom model");
    }
    if (!j.contains("filter") || !j["filter"].contains("x0_hat") || !j["filter"].contains("P0")) {
      throw ConfigError("filter: x0_hat and P0 are required for a custom model");
    }
  }
  if (j.contains("x0")) config.x0 = vector_from_json(j["x0"], "x0");
  if (j.contains("delta")) config.delta = number(j, "delta");
  if (j.contains("horizon")) config.horizon = number(j, "horizon");
  if (j.contains("runs")) config.runs = unsigned_integer(j, "runs");
  if (j.contains("seed")) config.seed = unsigned_integer(j, "seed");
  if (j.contains("truth_substeps")) config.truth_substeps = unsigned_integer(j, "truth_substeps");
  if (j.contains("measurement")) config.measurement = measurement_from_json(j["measurement"]);
  if (j.contains("r_bounds")) {
    const auto b = vector_from_json(j["r_bounds"], "r_bounds");
    if (b.size() != 2) throw ConfigError("r_bounds: expected [lower, upper]");
    config.measurement.check_noise_bounds(b[0], b[1]);
  }
  if (j.contains("filter")) {
    const auto& f = j["filter"];
    if (f.contains("x0_hat")) config.x0_hat = vector_from_json(f["x0_hat"], "filter.x0_hat");
    if (f.contains("P0")) config.P0 = matrix_from_json(f["P0"], "filter.P0");
    if (f.contains("Q0")) config.filter_options.Q0 = matrix_from_json(f["Q0"], "filter.Q0");
    if (f.contains("jacobian")) {
      const auto src = f["jacobian"].get<std::string>();
      if (src == "analytic") {
        config.filter_options.jacobian = filter::JacobianSource::analytic;
      } else if (src == "finite_difference") {
        config.filter_options.jacobian = filter::JacobianSource::finite_difference;
      } else {
        throw ConfigError("filter.jacobian: expected 'analytic' or 'finite_difference'");
      }
    }
  }
  if (j.contains("process_noise")) config.process_noise.enabled = j["process_noise"].get<bool>();
  if (j.contains("measurement_noise")) config.measurement_noise.enabled = j["measurement_noise"].get<bool>();

  const auto n = static_cast<Eigen::Index>(config.model.species_count());
  if (config.x0.size() != n) throw ConfigError("x0: expected " + std::to_string(n) + " entries");
  if (config.x0_hat.size() != n) throw ConfigError("filter.x0_hat: expected " + std::to_string(n) + " entries");
  if (config.P0.rows() != n || config.P0.cols() != n) throw ConfigError("filter.P0: expected an n x n matrix");
  if (static_cast<Eigen::Index>(config.measurement.states()) != n) {
    throw ConfigError("measurement.C: expected " + std::to_string(n) + " columns");
  }
  if (config.runs < 1) throw ConfigError("runs: must be at least 1");
  config.steps();
  return config;
}

json experiment_to_json(const harness::ExperimentConfig& c) {
  json j;
  j["model"] = model_to_json(c.model);
  j["x0"] = to_json(c.x0);
  j["delta"] = c.delta;
  j["horizon"] = c.horizon;
  j["steps"] = c.steps();
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  j["truth_substeps"] = c.truth_substeps;
  j["measurement"] = {{"C", to_json(c.measurement.C())}, {"R", to_json(c.measurement.R())}};
  j["filter"] = {{"x0_hat", to_json(c.x0_hat)},
                 {"P0", to_json(c.P0)},
                 {"jacobian", c.filter_options.jacobian == filter::JacobianSource::analytic ? "analytic"
                                                                                            : "finite_difference"}};
  if (c.filter_options.Q0) j["filter"]["Q0"] = to_json(*c.filter_options.Q0);
  j["process_noise"] = c.process_noise.enabled;
  j["measurement_noise"] = c.measurement_noise.enabled;
  j["propensity_clamping"] = "negative propensities are clamped to zero; states are not clamped";
  return j;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const sim::Trajectory& traj, const std::vector<std::string>& species) {
  out << 't';
  for (const auto& s : species) out << ',' << s;
  out << '\n';
  for (Eigen::Index k = 0; k < traj.states.rows(); ++k) {
    out << format_double(static_cast<double>(k) * traj.delta);
    for (Eigen::Index i = 0; i < traj.states.cols(); ++i) out << ',' << format_double(traj.states(k, i));
    out << '\n';
  }
}

void write_measurements_csv(std::ostream& out, const sim::MeasurementSeries& series, double delta) {
  out << 't';
  for (Eigen::Index i = 0; i < series.values.cols(); ++i) out << ",y" << (i + 1);
  out << '\n';
  for (Eigen::Index k = 0; k < series.values.rows(); ++k) {
    out << format_double(static_cast<double>(k + 1) * delta);
    for (Eigen::Index i = 0; i < series.values.cols(); ++i) out << ',' << format_double(series.values(k, i));
    out << '\n';
  }
}

void write_series_csv(std::ostream& out, std::span<const double> values, double delta) {
  out << "k,t,value\n";
  for (std::size_t k = 0; k < values.size(); ++k) {
    out << k << ',' << format_double(static_cast<double>(k) * delta) << ',' << format_double(values[k]) << '\n';
  }
}

sim::MeasurementSeries read_measurements_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("measurement CSV is empty");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (columns == 0) throw ConfigError("measurement CSV needs a time column and at least one output");
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(fields, cell, ',')) {
      double v = 0.0;
      try {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        std::size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError("measurement CSV row " + std::to_string(rows + 1) + ": bad number '" + cell + "'");
      }
      if (col > 0) values.push_back(v);
      ++col;
    }
    if (col != columns + 1) throw ConfigError("measurement CSV row " + std::to_string(rows + 1) + ": wrong column count");
    ++rows;
  }
  sim::MeasurementSeries series;
  series.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(columns));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns; ++c) {
      series.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * columns + c];
    }
  }
  return series;
}

FilterCsvWriter::FilterCsvWriter(std::ostream& out, std::size_t n, std::size_t p, double delta)
    : out_(out), delta_(delta) {
  out_ << "k,t";
  for (std::size_t i = 1; i <= n; ++i) out_ << ",xhat_" << i;
  out_ << ",trace_P,norm_P,norm_Q";
  for (std::size_t i = 1; i <= p; ++i) out_ << ",innov_" << i;
  out_ << '\n';
}

void FilterCsvWriter::write(const filter::StepRecord& rec) {
  const auto k = rec.posterior.step;
  out_ << k << ',' << format_double(static_cast<double>(k) * delta_);
  for (Eigen::Index i = 0; i < rec.posterior.mean.size(); ++i) out_ << ',' << format_double(rec.posterior.mean[i]);
  out_ << ',' << format_double(rec.posterior.cov.trace()) << ',' << format_double(filter::symmetric_norm(rec.posterior.cov))
       << ',' << format_double(filter::symmetric_norm(rec.Q));
  for (Eigen::Index i = 0; i < rec.innovation.size(); ++i) out_ << ',' << format_double(rec.innovation[i]);
  out_ << '\n';
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), bytes.size());
  } else {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), bytes.size())) throw ConfigError("truncated record dump");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put(out, m(r, c));
  }
}

Eigen::MatrixXd get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get<double>(in);
  }
  return m;
}

constexpr char kMagic[8] = {'C', 'L', 'E', 'E', 'K', 'F', '0', '1'};

}  // namespace

void write_records_binary(std::ostream& out, std::span<const filter::StepRecord> records) {
  const std::uint32_t n = records.empty() ? 0 : static_cast<std::uint32_t>(records.front().prior_mean.size());
  const std::uint32_t p = records.empty() ? 0 : static_cast<std::uint32_t>(records.front().innovation.size());
  out.write(kMagic, sizeof kMagic);
  put(out, n);
  put(out, p);
  put(out, static_cast<std::uint64_t>(records.size()));
  for (const auto& r : records) {
    put(out, static_cast<std::uint64_t>(r.posterior.step));
    put_matrix(out, r.prior_mean);
    put_matrix(out, r.prior_cov);
    put_matrix(out, r.Q);
    put_matrix(out, r.F);
    put_matrix(out, r.gain);
    put_matrix(out, r.innovation);
    put_matrix(out, r.posterior.mean);
    put_matrix(out, r.posterior.cov);
  }
}

std::vector<filter::StepRecord> read_records_binary(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ConfigError("not a filter record dump");
  }
  const auto n = static_cast<Eigen::Index>(get<std::uint32_t>(in));
  const auto p = static_cast<Eigen::Index>(get<std::uint32_t>(in));
  const auto count = get<std::uint64_t>(in);
  std::vector<filter::StepRecord> records;
  for (std::uint64_t i = 0; i < count; ++i) {
    filter::StepRecord r;
    r.posterior.step = get<std::uint64_t>(in);
    r.prior_mean = get_matrix(in, n, 1);
    r.prior_cov = get_matrix(in, n, n);
    r.Q = get_matrix(in, n, n);
    r.F = get_matrix(in, n, n);
    r.gain = get_matrix(in, n, p);
    r.innovation = get_matrix(in, p, 1);
    r.posterior.mean = get_matrix(in, n, 1);
    r.posterior.cov = get_matrix(in, n, n);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace cle_ekf::io
