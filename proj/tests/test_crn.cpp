#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cle_ekf/crn.hpp"
#include "cle_ekf/errors.hpp"
#include "cle_ekf/harness.hpp"
#include "test_support.hpp"

using namespace cle_ekf;
using namespace cle_ekf::testing;

namespace {

// Term-by-term recomputation that does not go through factor_value.
double naive_propensity(const crn::Reaction& r, const Vector& x) {
  double value = r.coefficient;
  for (const auto& f : r.factors) {
    if (const auto* s = std::get_if<crn::SpeciesValue>(&f)) {
      value = value * x(static_cast<Eigen::Index>(s->index));
    } else {
      const auto& c = std::get<crn::Complement>(f);
      value = value * (c.total - x(static_cast<Eigen::Index>(c.index)));
    }
  }
  return value < 0.0 ? 0.0 : value;
}

Matrix central_difference(const crn::ReactionNetwork& net, const Vector& x) {
  Matrix jac(static_cast<Eigen::Index>(net.reaction_count()), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Vector up = x, down = x;
    up[i] += h;
    down[i] -= h;
    jac.col(i) = (crn::propensities(net, up) - crn::propensities(net, down)) / (2.0 * h);
  }
  return jac;
}

}  // namespace

TEST_CASE("birth-death propensities") {
  const auto net = birth_death();
  const Vector a = crn::propensities(net, Vector::Constant(1, 50.0));
  CHECK(a[0] == doctest::Approx(10.0));
  CHECK(a[1] == doctest::Approx(5.0));
}

TEST_CASE("complement propensities vanish at the conserved total") {
  harness::GeneExpressionParams p;
  const auto net = harness::gene_expression_model(p);
  Vector x(4);
  x << p.P_tot, 10.0, p.R_tot, 30.0;
  const Vector a = crn::propensities(net, x);
  CHECK(a[1] == 0.0);
  CHECK(a[2] == 0.0);
  CHECK(a[4] == 0.0);
  CHECK(a[5] == 0.0);
  CHECK(a[0] > 0.0);
}

TEST_CASE("propensities match a naive per-term oracle on random networks") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto net = random_network(gen, 3, 5);
    const Vector x = random_state(gen, 3, 0.0, 60.0);
    const Vector a = crn::propensities(net, x);
    for (std::size_t j = 0; j < net.reaction_count(); ++j) {
      const double expected = naive_propensity(net.reactions()[j], x);
      CHECK(std::abs(a[static_cast<Eigen::Index>(j)] - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST_CASE("propensities are nonnegative everywhere") {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 500; ++trial) {
    const auto net = random_network(gen, 3, 6);
    const Vector x = random_state(gen, 3, -100.0, 150.0);
    CHECK((crn::propensities(net, x).array() >= 0.0).all());
  }
}

TEST_CASE("propensity jacobian") {
  SUBCASE("linear propensity") {
    const Matrix jac = crn::propensity_jacobian(birth_death(), Vector::Constant(1, 50.0));
    CHECK(jac.rows() == 2);
    CHECK(jac(0, 0) == 0.0);
    CHECK(jac(1, 0) == doctest::Approx(0.1));
  }
  SUBCASE("complement derivative is -k") {
    Eigen::MatrixXi V(1, 1);
    V << 1;
    const crn::ReactionNetwork net({"A"}, {{0.7, {crn::Complement{20.0, 0}}}}, V);
    for (double x : {0.0, 3.0, 19.5}) {
      CHECK(crn::propensity_jacobian(net, Vector::Constant(1, x))(0, 0) == doctest::Approx(-0.7));
    }
  }
  SUBCASE("clamped reactions have zero rows") {
    Eigen::MatrixXi V(1, 1);
    V << 1;
    const crn::ReactionNetwork net({"A"}, {{0.7, {crn::Complement{20.0, 0}}}}, V);
    CHECK(crn::propensity_jacobian(net, Vector::Constant(1, 25.0))(0, 0) == 0.0);
    CHECK(crn::propensities(net, Vector::Constant(1, 25.0))[0] == 0.0);
  }
  SUBCASE("matches central finite differences at interior points") {
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 200; ++trial) {
      const auto net = random_network(gen, 3, 6, 50.0);
      // Inside (1, 40) every factor is strictly positive, so no clamping is active.
      const Vector x = random_state(gen, 3, 1.0, 40.0);
      const Matrix analytic = crn::propensity_jacobian(net, x);
      const Matrix numeric = central_difference(net, x);
      const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
      CHECK((analytic - numeric).cwiseAbs().maxCoeff() <= 1e-5 * scale);
    }
  }
}

TEST_CASE("drift") {
  CHECK(crn::drift(inert(), Vector::Constant(2, 3.5), 0.1) == Vector::Constant(2, 3.5));
  CHECK(crn::drift(birth_death(), Vector::Constant(1, 50.0), 0.01)[0] == doctest::Approx(50.05).epsilon(1e-14));
  CHECK_THROWS_AS(crn::drift(birth_death(), Vector::Constant(1, 1.0), 0.0), ConfigError);
  CHECK_THROWS_AS(crn::drift(birth_death(), Vector::Constant(1, 1.0), -1.0), ConfigError);

  SUBCASE("gene expression matches an explicit dense multiply") {
    const auto net = harness::gene_expression_model({});
    std::mt19937_64 gen(14);
    for (int trial = 0; trial < 100; ++trial) {
      Vector x(4);
      x << random_state(gen, 1, 0, 10)[0], random_state(gen, 1, 0, 50)[0], random_state(gen, 1, 0, 30)[0],
          random_state(gen, 1, 0, 160)[0];
      const double delta = 5e-4;
      const Vector a = crn::propensities(net, x);
      Vector expected = x;
      for (Eigen::Index i = 0; i < 4; ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < 8; ++j) acc += net.stoichiometry()(i, j) * a[j];
        expected[i] += delta * acc;
      }
      CHECK(rel_diff(crn::drift(net, x, delta), expected) <= 1e-12);
    }
  }
}

TEST_CASE("diffusion") {
  CHECK(crn::diffusion(inert(), Vector::Constant(2, 1.0), 0.1).isZero());
  const Matrix G = crn::diffusion(birth_death(), Vector::Constant(1, 50.0), 0.01);
  CHECK(G(0, 0) == doctest::Approx(0.1 * std::sqrt(10.0)));
  CHECK(G(0, 1) == doctest::Approx(-0.1 * std::sqrt(5.0)));
  CHECK_THROWS_AS(crn::diffusion(birth_death(), Vector::Constant(1, 1.0), 0.0), ConfigError);

  SUBCASE("G G^T equals delta V diag(a) V^T") {
    std::mt19937_64 gen(15);
    for (int trial = 0; trial < 200; ++trial) {
      const auto net = random_network(gen, 4, 7);
      const Vector x = random_state(gen, 4, -5.0, 60.0);
      const double delta = std::uniform_real_distribution<double>(1e-4, 1.0)(gen);
      const Matrix Gm = crn::diffusion(net, x, delta);
      const Vector a = crn::propensities(net, x);
      Matrix expected = Matrix::Zero(4, 4);
      for (Eigen::Index j = 0; j < a.size(); ++j) expected += delta * a[j] * net.V().col(j) * net.V().col(j).transpose();
      CHECK(rel_diff(Gm * Gm.transpose(), expected) <= 1e-12);
    }
  }
}

TEST_CASE("spectral norm") {
  CHECK(crn::spectral_norm(Matrix::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(crn::spectral_norm(harness::gene_expression_model({}).V()) == doctest::Approx(2.7657).epsilon(0.0005 / 2.7657));

  std::mt19937_64 gen(16);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rows = std::uniform_int_distribution<Eigen::Index>(1, 8)(gen);
    const auto cols = std::uniform_int_distribution<Eigen::Index>(1, 8)(gen);
    const Matrix m = random_matrix(gen, rows, cols);
    const double svd = Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
    CHECK(std::abs(crn::spectral_norm(m) - svd) <= 1e-9 * svd);
  }
}

TEST_CASE("squared diagonal norm is bounded by the propensity norm") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 500; ++trial) {
    const auto net = random_network(gen, 3, 6);
    const Vector a = crn::propensities(net, random_state(gen, 3, -20.0, 60.0));
    const double diag_norm = crn::spectral_norm(Matrix(a.asDiagonal()));
    const auto nonzero = (a.array() > 0.0).count();
    if (nonzero >= 2) {
      CHECK(diag_norm < a.norm());
    } else {
      CHECK(diag_norm == doctest::Approx(a.norm()));
    }
  }
}

TEST_CASE("network validation") {
  Eigen::MatrixXi V(1, 2);
  V << 1, 0;
  CHECK_THROWS_AS(crn::ReactionNetwork({"A"}, {{1.0, {}}, {1.0, {}}}, V), ConfigError);
  V << 1, -1;
  CHECK_THROWS_AS(crn::ReactionNetwork({"A"}, {{1.0, {}}, {1.0, {crn::SpeciesValue{1}}}}, V), ConfigError);
  CHECK_THROWS_AS(crn::ReactionNetwork({"A"}, {{-1.0, {}}, {1.0, {}}}, V), ConfigError);
  CHECK_THROWS_AS(crn::ReactionNetwork({"A"}, {{1.0, {}}, {1.0, {crn::Complement{-2.0, 0}}}}, V), ConfigError);
  CHECK_THROWS_AS(crn::ReactionNetwork({"A", "B"}, {{1.0, {}}, {1.0, {}}}, V), ConfigError);
  CHECK_THROWS_AS(crn::propensities(birth_death(), Vector::Zero(2)), ConfigError);
  CHECK(birth_death().species_index("A") == 0);
  CHECK_THROWS_AS(birth_death().species_index("Z"), ConfigError);
}
