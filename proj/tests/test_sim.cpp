#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cle_ekf/errors.hpp"
#include "cle_ekf/harness.hpp"
#include "cle_ekf/sim.hpp"
#include "test_support.hpp"

#include <cstring>

using namespace cle_ekf;
using namespace cle_ekf::testing;

TEST_CASE("zero-propensity network gives a constant trajectory") {
  const Vector x0 = (Vector(2) << 1.5, -2.0).finished();
  const auto traj = sim::simulate(inert(), x0, 0.1, 50, 3);
  CHECK(traj.states.rows() == 51);
  for (Eigen::Index k = 0; k < traj.states.rows(); ++k) CHECK(traj.states.row(k).transpose() == x0);
}

TEST_CASE("noise-free simulation is repeated drift") {
  const auto net = harness::gene_expression_model({});
  const Vector x0 = harness::GeneExpressionParams{}.initial + Vector::Constant(4, 1.0);
  const auto traj = sim::simulate(net, x0, 5e-3, 400, 1, {.enabled = false});
  Vector x = x0;
  for (Eigen::Index k = 1; k <= 400; ++k) {
    x = crn::drift(net, x, 5e-3);
    REQUIRE(traj.states.row(k).transpose() == x);
  }
}

TEST_CASE("one step equals drift plus diffusion times noise") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = random_network(gen, 3, 5);
    const Vector x = random_state(gen, 3, 0.0, 40.0);
    const Vector w = random_matrix(gen, 5, 1);
    const Vector expected = crn::drift(net, x, 0.01) + crn::diffusion(net, x, 0.01) * w;
    CHECK(rel_diff(sim::em_step(net, x, 0.01, w), expected) <= 1e-13);
  }
}

TEST_CASE("trajectories are reproducible bit for bit") {
  const auto net = harness::gene_expression_model({});
  const Vector x0 = harness::GeneExpressionParams{}.initial;
  const auto a = sim::simulate(net, x0, 5e-4, 2000, 77);
  const auto b = sim::simulate(net, x0, 5e-4, 2000, 77);
  REQUIRE(a.states.size() == b.states.size());
  CHECK(std::memcmp(a.states.data(), b.states.data(), sizeof(double) * a.states.size()) == 0);
  const auto c = sim::simulate(net, x0, 5e-4, 2000, 78);
  CHECK(a.states != c.states);
  CHECK(sim::simulate_substepped(net, x0, 5e-4, 2000, 1, 77).states == a.states);
}

TEST_CASE("birth-death ensemble mean settles at the deterministic fixed point") {
  // Fixed point of dx/dt = k1 - d x is k1 / d = 100.
  const auto net = birth_death(10.0, 0.1);
  const int seeds = 200;
  double sum = 0.0, sq = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto traj = sim::simulate(net, Vector::Constant(1, 50.0), 0.01, 100000, static_cast<std::uint64_t>(s));
    const double final_value = traj.states(traj.states.rows() - 1, 0);
    sum += final_value;
    sq += final_value * final_value;
  }
  const double mean = sum / seeds;
  const double sd = std::sqrt((sq - seeds * mean * mean) / (seeds - 1));
  CHECK(std::abs(mean - 100.0) <= 3.0 * sd / std::sqrt(seeds));
}

TEST_CASE("simulation errors") {
  const auto net = birth_death();
  CHECK_THROWS_AS(sim::simulate(net, Vector::Constant(1, 1.0), 0.0, 10, 1), ConfigError);
  CHECK_THROWS_AS(sim::simulate(net, Vector::Constant(1, 1.0), 0.1, 0, 1), ConfigError);
  CHECK_THROWS_AS(sim::simulate(net, Vector::Constant(2, 1.0), 0.1, 10, 1), ConfigError);

  Eigen::MatrixXi V(1, 1);
  V << 1;
  const crn::ReactionNetwork explosive({"A"}, {{1.0, {crn::SpeciesValue{0}, crn::SpeciesValue{0}}}}, V);
  try {
    sim::simulate(explosive, Vector::Constant(1, 1e10), 1.0, 100, 1, {.enabled = false});
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(e.step() >= 1);
    CHECK(e.step() <= 100);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("measurements") {
  const auto net = harness::gene_expression_model({});
  const auto traj = sim::simulate(net, harness::GeneExpressionParams{}.initial, 5e-4, 100, 5);

  SUBCASE("noise-free measurements are C x") {
    const sim::MeasurementModel model(harness::gene_expression_measurement_matrix(), Matrix::Identity(2, 2) * 12.5);
    const auto y = sim::measure(traj, model, 9, {.enabled = false});
    REQUIRE(y.values.rows() == 100);
    for (Eigen::Index k = 1; k <= 100; ++k) {
      CHECK(y.values(k - 1, 0) == traj.states(k, 1));
      CHECK(y.values(k - 1, 1) == traj.states(k, 3));
    }
  }
  SUBCASE("identity C replays the states") {
    const sim::MeasurementModel model(Matrix::Identity(4, 4), Matrix::Identity(4, 4));
    const auto y = sim::measure(traj, model, 9, {.enabled = false});
    CHECK(y.values == traj.states.bottomRows(100));
  }
  SUBCASE("noisy measurements are reproducible and scatter around C x") {
    const sim::MeasurementModel model(harness::gene_expression_measurement_matrix(), Matrix::Identity(2, 2) * 12.5);
    const auto a = sim::measure(traj, model, 9);
    const auto b = sim::measure(traj, model, 9);
    CHECK(a.values == b.values);
    const Matrix resid = a.values - (model.C() * traj.states.bottomRows(100).transpose()).transpose();
    CHECK(resid.cwiseAbs().maxCoeff() < 6.0 * std::sqrt(12.5));
    CHECK(resid.cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("dimension mismatch") {
    const sim::MeasurementModel model(Matrix::Identity(3, 3), Matrix::Identity(3, 3));
    CHECK_THROWS_AS(sim::measure(traj, model, 1), ConfigError);
  }
}

TEST_CASE("measurement model validation") {
  CHECK_THROWS_AS(sim::MeasurementModel(Matrix::Identity(2, 4), Matrix::Identity(3, 3)), ConfigError);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(sim::MeasurementModel(Matrix::Identity(2, 4), asym), ConfigError);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(sim::MeasurementModel(Matrix::Identity(2, 4), indefinite), ConfigError);

  const sim::MeasurementModel model(Matrix::Identity(2, 4), Matrix::Identity(2, 2) * 12.5);
  CHECK_NOTHROW(model.check_noise_bounds(10.0, 15.0));
  CHECK_THROWS_AS(model.check_noise_bounds(13.0, 15.0), ConfigError);
}
