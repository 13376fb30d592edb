// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include "cle_ekf/crn.hpp"
#include "cle_ekf/filter.hpp"
#include "cle_ekf/harness.hpp"
#include "cle_ekf/sim.hpp"
#include "cle_ekf/stability.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

using namespace cle_ekf;
using namespace cle_ekf::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

stability::StabilityParams published_bounds() {
  stability::StabilityParams p;
  p.L_f = 0.85;
  p.L_a = 0.8;
  p.v_bound = 2.7657;
  p.C_A = 100.0;
  p.r_lb = 10.0;
  p.r_ub = 15.0;
  p.c_bound = 1.0;
  p.m = 8;
  p.p = 2;
  p.m1 = 80.0;
  p.m2 = 800.0;
  return p;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

Outcome coefficients() {
  const auto c = stability::polynomial_coefficients(published_bounds());
  const std::array<double, 4> want{20274.482, 77497.805, 469.051, -0.277};
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, rel(c[i], want[i]));
  return {worst <= 0.01, fmt("[%.3f, %.3f, %.3f, %.4f], worst relative error %.2e", c[0], c[1], c[2], c[3], worst)};
}

Outcome root() {
  const auto p = published_bounds();
  const auto c = stability::polynomial_coefficients(p);
  const double d = stability::delta_max(p);
  const double residual = std::abs(stability::evaluate(c, d));
  const bool ok = rel(d, 5.42e-4) <= 0.01 && residual < 1e-9 * std::abs(c[3]);
  return {ok, fmt("delta_max = %.6e, residual %.2e", d, residual)};
}

Outcome stoichiometry() {
  const double v = crn::spectral_norm(harness::gene_expression_model({}).V());
  return {std::abs(v - 2.7657) <= 0.0005, fmt("||V|| = %.6f", v)};
}

double final_quarter_mean(const std::vector<double>& s) {
  const std::size_t start = s.size() - s.size() / 4;
  double sum = 0.0;
  for (std::size_t k = start; k < s.size(); ++k) sum += s[k];
  return sum / static_cast<double>(s.size() - start);
}

double final_quarter_max(const std::vector<double>& s) {
  return *std::max_element(s.end() - static_cast<std::ptrdiff_t>(s.size() / 4), s.end());
}

double final_quarter_cv(const std::vector<double>& s) {
  const double mean = final_quarter_mean(s);
  const std::size_t start = s.size() - s.size() / 4;
  double var = 0.0;
  for (std::size_t k = start; k < s.size(); ++k) var += (s[k] - mean) * (s[k] - mean);
  return std::sqrt(var / static_cast<double>(s.size() - start)) / mean;
}

Outcome boundedness() {
  auto config = harness::default_experiment();
  config.delta = 5e-4;
  config.horizon = 80.0;
  config.runs = 100;
  config.seed = 1;
  const auto m = harness::run_experiment(config);
  const double g = stability::gamma(published_bounds(), config.delta);
  const auto check = stability::check_exponential_bound(m.mse, g);
  const double p_ratio = final_quarter_max(m.p_norm) / final_quarter_mean(m.p_norm);
  const double q_cv = final_quarter_cv(m.q_norm);
  const bool ok = check.satisfied && p_ratio <= 2.0 && q_cv < 0.2;
  return {ok, fmt("(i) bound %s with gamma %.4f, C0 %.3f; (ii) ||P+|| max/mean %.3f; (iii) ||Q|| cv %.4f",
                  check.satisfied ? "holds" : "fails", g, check.C0, p_ratio, q_cv)};
}

Outcome filter_oracles() {
  std::mt19937_64 gen(2024);
  std::vector<std::string> failures;

  double worst_gain = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = std::uniform_int_distribution<Eigen::Index>(1, 6)(gen);
    const auto p = std::uniform_int_distribution<Eigen::Index>(1, n)(gen);
    const sim::MeasurementModel model(random_matrix(gen, p, n), random_spd(gen, p, 0.5));
    const auto rec = filter::correct(random_state(gen, static_cast<std::size_t>(n), -5, 5), random_spd(gen, n),
                                     random_state(gen, static_cast<std::size_t>(p), -5, 5), model);
    worst_gain = std::max(worst_gain, rel_diff(rec.gain, filter::information_gain(rec.posterior.cov, model)));
  }
  if (!(worst_gain <= 1e-8)) failures.push_back("gain");

  // Linear network: the EKF must reduce to the textbook Kalman filter.
  const auto chain = linear_chain();
  Vector offset = Vector::Zero(4);
  offset[0] = 20.0;
  Matrix slope = Matrix::Zero(4, 2);
  slope(1, 0) = 0.3;
  slope(2, 1) = 0.2;
  slope(3, 0) = 0.1;
  const double delta = 0.01;
  const LinearKalmanOracle oracle(chain.stoichiometry(), offset, slope, delta);
  const sim::MeasurementModel chain_model((Matrix(1, 2) << 1.0, 0.5).finished(), Matrix::Constant(1, 1, 2.0));
  const Vector x0 = (Vector(2) << 50.0, 75.0).finished();
  const auto traj = sim::simulate(chain, x0, delta, 1000, 8);
  const auto y = sim::measure(traj, chain_model, 8);
  Vector xo = (Vector(2) << 40.0, 90.0).finished();
  Matrix Po = Matrix::Identity(2, 2) * 50.0;
  const auto records = filter::run(chain, y, chain_model, xo, Po, delta);
  double worst_linear = 0.0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    oracle.predict(xo, Po);
    LinearKalmanOracle::correct(xo, Po, y.values.row(static_cast<Eigen::Index>(k)).transpose(), chain_model.C(),
                                chain_model.R());
    worst_linear = std::max({worst_linear, rel_diff(records[k].posterior.mean, xo), rel_diff(records[k].posterior.cov, Po)});
  }
  if (!(worst_linear <= 1e-10)) failures.push_back("linear");

  // Long gene-expression run: Q identity and covariance health at every step.
  auto config = harness::default_experiment();
  config.horizon = 50.0;
  const auto long_traj = sim::simulate(config.model, config.x0, config.delta, config.steps(), 5);
  const auto long_y = sim::measure(long_traj, config.measurement, 5);
  const Eigen::MatrixXi V = config.model.stoichiometry();
  Vector previous = config.x0_hat;
  double worst_q = 0.0, worst_asym = 0.0, min_eig = std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
  filter::run_streaming(config.model, long_y, config.measurement, config.x0_hat, config.P0, config.delta,
                        [&](const filter::StepRecord& rec) {
                          const Matrix expected =
                              dense_process_noise(V, crn::propensities(config.model, previous), config.delta);
                          worst_q = std::max(worst_q, rel_diff(rec.Q, expected));
                          const Matrix& P = rec.posterior.cov;
                          worst_asym = std::max(worst_asym, rel_diff(P, P.transpose()));
                          min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().minCoeff());
                          previous = rec.posterior.mean;
                          ++steps;
                        });
  if (!(worst_q <= 1e-12)) failures.push_back("Q identity");
  if (!(worst_asym <= 1e-12 && min_eig >= -1e-10)) failures.push_back("covariance");

  std::string detail = fmt(
      "(i) gain %.2e; (ii) linear KF %.2e over %zu steps; (iii) Q %.2e over %zu steps; (iv) asymmetry %.2e, min eig %.3e",
      worst_gain, worst_linear, records.size(), worst_q, steps, worst_asym, min_eig);
  for (const auto& f : failures) detail += "; failed: " + f;
  return {failures.empty(), detail};
}

stability::StabilityParams random_params(std::mt19937_64& gen) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); };
  stability::StabilityParams p;
  p.L_f = u(0.01, 0.99);
  p.L_a = u(0.0, 5.0);
  p.v_bound = u(0.5, 5.0);
  p.C_A = u(0.0, 500.0);
  p.r_lb = u(0.5, 20.0);
  p.r_ub = p.r_lb * u(1.0, 3.0);
  p.c_bound = u(0.1, 3.0);
  p.m = std::uniform_int_distribution<int>(1, 12)(gen);
  p.p = std::uniform_int_distribution<int>(1, 6)(gen);
  p.m1 = u(0.0, 200.0);
  p.m2 = u(0.0, 5000.0);
  return p;
}

Outcome descartes_sweep() {
  std::mt19937_64 gen(77);
  std::size_t bad_signs = 0, bad_gamma0 = 0, bad_root = 0, bad_monotone = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_params(gen);
    if (stability::sign_changes(stability::polynomial_coefficients(p)) != 1) ++bad_signs;
    if (std::abs(stability::gamma(p, 0.0) - p.L_f * p.L_f) > 1e-15) ++bad_gamma0;
    const double base = stability::delta_max(p);
    if (std::abs(stability::gamma(p, base) - 1.0) > 1e-8) ++bad_root;
    const double factor = std::uniform_real_distribution<double>(1.01, 3.0)(gen);
    std::array<stability::StabilityParams, 4> bumped{p, p, p, p};
    bumped[0].C_A = p.C_A * factor + 1.0;
    bumped[1].L_a = p.L_a * factor + 0.1;
    bumped[2].m1 = *p.m1 * factor + 1.0;
    bumped[3].m2 = *p.m2 * factor + 1.0;
    for (const auto& q : bumped) {
      if (stability::delta_max(q) > base) ++bad_monotone;
    }
  }
  const bool ok = bad_signs + bad_gamma0 + bad_root + bad_monotone == 0;
  return {ok, fmt("1000 parameter sets: %zu sign, %zu gamma(0), %zu root, %zu monotonicity violations", bad_signs,
                  bad_gamma0, bad_root, bad_monotone)};
}

Outcome simulator_statistics() {
  const auto net = harness::gene_expression_model({});
  const Vector x = harness::GeneExpressionParams{}.initial;
  const double delta = 5e-4;
  const Vector mean = crn::drift(net, x, delta);
  const std::size_t draws = 10000;
  const auto n = x.size();
  Matrix S = Matrix::Zero(n, n);
  for (std::size_t s = 0; s < draws; ++s) {
    const Vector d = sim::simulate(net, x, delta, 1, s).states.row(1).transpose() - mean;
    S += d * d.transpose();
  }
  S /= static_cast<double>(draws);
  const Matrix sigma = dense_process_noise(net.stoichiometry(), crn::propensities(net, x), delta);

  // Likelihood-ratio test of a zero-mean Gaussian sample against a known covariance.
  const Matrix M = sigma.llt().solve(S);
  const double stat = static_cast<double>(draws) * (M.trace() - std::log(M.determinant()) - static_cast<double>(n));
  const double dof = static_cast<double>(n * (n + 1) / 2);
  const double critical = boost::math::quantile(boost::math::chi_squared(dof), 0.99);
  const bool cov_ok = stat < critical;

  auto config = harness::default_experiment();
  config.horizon = 1.0;
  config.runs = 8;
  std::vector<harness::EnsembleMetrics> results;
  for (std::size_t jobs : {1u, 2u, 3u, 8u}) {
    config.jobs = jobs;
    results.push_back(harness::run_experiment(config));
  }
  const auto same = [](const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
  };
  bool repro_ok = true;
  for (const auto& r : results) {
    repro_ok = repro_ok && same(r.mse, results[0].mse) && same(r.p_norm, results[0].p_norm) &&
               same(r.q_norm, results[0].q_norm);
  }
  return {cov_ok && repro_ok, fmt("covariance statistic %.2f < %.2f (chi-square %g dof, 1%%): %s; jobs 1/2/3/8 %s",
                                  stat, critical, dof, cov_ok ? "yes" : "no",
                                  repro_ok ? "bitwise identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"A1 coefficient reproduction", coefficients},
      {"A2 delta_max reproduction", root},
      {"A3 stoichiometry norm", stoichiometry},
      {"A4 ensemble boundedness", boundedness},
      {"A5 filter oracles", filter_oracles},
      {"A6 sign and monotonicity sweep", descartes_sweep},
      {"A7 simulator statistics", simulator_statistics},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s (%.1f s)\n", outcome.pass ? "PASS" : "FAIL", name, outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!outcome.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
