#include "cle_ekf/crn.hpp"
#include "cle_ekf/errors.hpp"
#include "cle_ekf/filter.hpp"
#include "cle_ekf/harness.hpp"
#include "cle_ekf/io.hpp"
#include "cle_ekf/sim.hpp"
#include "cle_ekf/stability.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace cle_ekf;

namespace {

crn::ReactionNetwork model_from_json_text(const std::string& text) {
  return io::model_from_json(io::json::parse(text));
}

stability::StabilityParams params_from_kwargs(const py::dict& d) {
  stability::StabilityParams p;
  auto req = [&](const char* k) {
    if (!d.contains(k)) throw ConfigError(std::string(k) + ": missing");
    return d[k].cast<double>();
  };
  auto opt = [&](const char* k) -> std::optional<double> {
    if (!d.contains(k) || d[k].is_none()) return std::nullopt;
    return d[k].cast<double>();
  };
  p.L_f = req("L_f");
  p.L_a = req("L_a");
  p.v_bound = req("v_bound");
  p.C_A = req("C_A");
  p.r_lb = req("r_lb");
  p.r_ub = req("r_ub");
  p.c_bound = req("c_bound");
  p.m = static_cast<int>(req("m"));
  p.p = static_cast<int>(req("p"));
  p.m1 = opt("m1");
  p.m2 = opt("m2");
  p.m3 = opt("m3");
  p.m4 = opt("m4");
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Extended Kalman filter with CLE-derived process noise and stability bounds";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_ArithmeticError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<crn::ReactionNetwork>(m, "ReactionNetwork")
      .def_static("from_json", &model_from_json_text, py::arg("text"))
      .def("to_json", [](const crn::ReactionNetwork& c) { return io::model_to_json(c).dump(); })
      .def_property_readonly("species", &crn::ReactionNetwork::species)
      .def_property_readonly("V", &crn::ReactionNetwork::V)
      .def_property_readonly("reaction_count", &crn::ReactionNetwork::reaction_count);

  m.def("propensities", &crn::propensities, py::arg("crn"), py::arg("x"));
  m.def("propensity_jacobian", &crn::propensity_jacobian, py::arg("crn"), py::arg("x"));
  m.def("drift", &crn::drift, py::arg("crn"), py::arg("x"), py::arg("delta"));
  m.def("diffusion", &crn::diffusion, py::arg("crn"), py::arg("x"), py::arg("delta"));
  m.def("spectral_norm", &crn::spectral_norm, py::arg("matrix"));

  m.def(
      "gene_expression_model",
      [](const py::kwargs& kw) {
        harness::GeneExpressionParams p;
        if (kw) p = io::gene_expression_params_from_json(io::json::parse(py::str(py::module_::import("json").attr("dumps")(kw)).cast<std::string>()));
        return harness::gene_expression_model(p);
      },
      "Gene expression network; keyword arguments override rate constants.");

  m.def(
      "simulate",
      [](const crn::ReactionNetwork& c, const Eigen::VectorXd& x0, double delta, std::size_t steps, std::uint64_t seed) {
        return sim::simulate(c, x0, delta, steps, seed).states;
      },
      py::arg("crn"), py::arg("x0"), py::arg("delta"), py::arg("steps"), py::arg("seed"),
      "Euler-Maruyama CLE trajectory, shape (steps + 1, n).");

  m.def(
      "measure",
      [](const Eigen::MatrixXd& states, double delta, const Eigen::MatrixXd& C, const Eigen::MatrixXd& R,
         std::uint64_t seed) {
        sim::Trajectory t{delta, states, 0};
        return sim::measure(t, sim::MeasurementModel(C, R), seed).values;
      },
      py::arg("states"), py::arg("delta"), py::arg("C"), py::arg("R"), py::arg("seed"));

  m.def("process_noise_cov",
        [](const crn::ReactionNetwork& c, const Eigen::VectorXd& x, double delta) {
          return filter::process_noise_cov(c, x, delta);
        },
        py::arg("crn"), py::arg("estimate"), py::arg("delta"));

  m.def(
      "run_filter",
      [](const crn::ReactionNetwork& c, const Eigen::MatrixXd& measurements, const Eigen::MatrixXd& C,
         const Eigen::MatrixXd& R, const Eigen::VectorXd& x0, const Eigen::MatrixXd& P0, double delta) {
        sim::MeasurementSeries series{measurements, 0};
        const auto records = filter::run(c, series, sim::MeasurementModel(C, R), x0, P0, delta);
        const auto n = static_cast<Eigen::Index>(c.species_count());
        Eigen::MatrixXd means(static_cast<Eigen::Index>(records.size()), n);
        std::vector<Eigen::MatrixXd> covs;
        for (std::size_t k = 0; k < records.size(); ++k) {
          means.row(static_cast<Eigen::Index>(k)) = records[k].posterior.mean.transpose();
          covs.push_back(records[k].posterior.cov);
        }
        return py::make_tuple(means, covs);
      },
      py::arg("crn"), py::arg("measurements"), py::arg("C"), py::arg("R"), py::arg("x0"), py::arg("P0"),
      py::arg("delta"), "Returns (posterior means, list of posterior covariances).");

  m.def("polynomial_coefficients",
        [](const py::kwargs& kw) { return stability::polynomial_coefficients(params_from_kwargs(kw)); });
  m.def("delta_max", [](const py::kwargs& kw) { return stability::delta_max(params_from_kwargs(kw)); });
  m.def(
      "gamma", [](double delta, const py::kwargs& kw) { return stability::gamma(params_from_kwargs(kw), delta); },
      py::arg("delta"));
  m.def(
      "check_exponential_bound",
      [](const std::vector<double>& mse, double g) {
        const auto r = stability::check_exponential_bound(mse, g);
        py::dict d;
        d["empirical_gamma"] = r.empirical_gamma;
        d["C0"] = r.C0;
        d["satisfied"] = r.satisfied;
        return d;
      },
      py::arg("mse"), py::arg("gamma"));

  m.def(
      "run_experiment",
      [](double delta, double horizon, std::size_t runs, std::uint64_t seed, std::size_t jobs) {
        auto config = harness::default_experiment();
        config.delta = delta;
        config.horizon = horizon;
        config.runs = runs;
        config.seed = seed;
        config.jobs = jobs;
        const auto metrics = [&] {
          py::gil_scoped_release release;
          return harness::run_experiment(config);
        }();
        py::dict d;
        d["mse"] = metrics.mse;
        d["p_norm"] = metrics.p_norm;
        d["q_norm"] = metrics.q_norm;
        return d;
      },
      py::arg("delta") = 5e-4, py::arg("horizon") = 80.0, py::arg("runs") = 100, py::arg("seed") = 1,
      py::arg("jobs") = 0, "Gene-expression ensemble with default settings.");
}
