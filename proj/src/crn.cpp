#include "cle_ekf/crn.hpp"

#include "cle_ekf/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cle_ekf::crn {

namespace {

void check_state(const ReactionNetwork& crn, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != crn.species_count()) {
    throw ConfigError("state has " + std::to_string(x.size()) + " entries, network has " +
                      std::to_string(crn.species_count()) + " species");
  }
}

void check_delta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ConfigError("time step must be positive and finite");
  }
}

}  // namespace

double factor_value(const Factor& factor, const Vector& x) {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, SpeciesValue>) {
          return x[static_cast<Eigen::Index>(f.index)];
        } else {
          return f.total - x[static_cast<Eigen::Index>(f.index)];
        }
      },
      factor);
}

double factor_slope(const Factor& factor) {
  return std::holds_alternative<SpeciesValue>(factor) ? 1.0 : -1.0;
}

std::size_t factor_index(const Factor& factor) {
  return std::visit([](const auto& f) { return f.index; }, factor);
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions,
                                 Eigen::MatrixXi stoichiometry)
    : species_(std::move(species)),
      reactions_(std::move(reactions)),
      stoich_(std::move(stoichiometry)) {
  const auto n = species_.size();
  const auto m = reactions_.size();
  if (n == 0) throw ConfigError("network must declare at least one species");
  if (m == 0) throw ConfigError("network must declare at least one reaction");
  if (static_cast<std::size_t>(stoich_.rows()) != n || static_cast<std::size_t>(stoich_.cols()) != m) {
    throw ConfigError("stoichiometric matrix must be " + std::to_string(n) + "x" + std::to_string(m));
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (stoich_.col(static_cast<Eigen::Index>(j)).isZero()) {
      throw ConfigError("reaction " + std::to_string(j) + " has an all-zero stoichiometric column");
    }
    const auto& r = reactions_[j];
    if (!(r.coefficient >= 0.0) || !std::isfinite(r.coefficient)) {
      throw ConfigError("reaction " + std::to_string(j) + " has a negative or non-finite coefficient");
    }
    for (const auto& f : r.factors) {
      if (factor_index(f) >= n) {
        throw ConfigError("reaction " + std::to_string(j) + " references an undeclared species");
      }
      if (const auto* c = std::get_if<Complement>(&f); c && !(c->total >= 0.0)) {
        throw ConfigError("reaction " + std::to_string(j) + " has a negative complement total");
      }
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (species_[a] == species_[b]) throw ConfigError("duplicate species name '" + species_[a] + "'");
    }
  }
  stoich_real_ = stoich_.cast<double>();
}

std::size_t ReactionNetwork::species_index(const std::string& name) const {
  const auto it = std::find(species_.begin(), species_.end(), name);
  if (it == species_.end()) throw ConfigError("unknown species '" + name + "'");
  return static_cast<std::size_t>(it - species_.begin());
}

Vector raw_propensities(const ReactionNetwork& crn, const Vector& x) {
  check_state(crn, x);
  const auto& reactions = crn.reactions();
  Vector a(static_cast<Eigen::Index>(reactions.size()));
  for (std::size_t j = 0; j < reactions.size(); ++j) {
    double value = reactions[j].coefficient;
    for (const auto& f : reactions[j].factors) value *= factor_value(f, x);
    a[static_cast<Eigen::Index>(j)] = value;
  }
  return a;
}

Vector propensities(const ReactionNetwork& crn, const Vector& x) {
  return raw_propensities(crn, x).cwiseMax(0.0);
}

Matrix propensity_jacobian(const ReactionNetwork& crn, const Vector& x) {
  check_state(crn, x);
  const auto& reactions = crn.reactions();
  Matrix jac = Matrix::Zero(static_cast<Eigen::Index>(reactions.size()), x.size());
  std::vector<double> values;
  for (std::size_t j = 0; j < reactions.size(); ++j) {
    const auto& r = reactions[j];
    values.clear();
    double raw = r.coefficient;
    for (const auto& f : r.factors) {
      values.push_back(factor_value(f, x));
      raw *= values.back();
    }
    if (raw < 0.0) continue;
    // Product rule: each factor contributes its slope times the product of the others.
    for (std::size_t l = 0; l < r.factors.size(); ++l) {
      double others = r.coefficient;
      for (std::size_t q = 0; q < r.factors.size(); ++q) {
        if (q != l) others *= values[q];
      }
      jac(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(factor_index(r.factors[l]))) +=
          factor_slope(r.factors[l]) * others;
    }
  }
  return jac;
}

Vector drift(const ReactionNetwork& crn, const Vector& x, double delta) {
  check_delta(delta);
  return x + delta * (crn.V() * propensities(crn, x));
}

Matrix diffusion(const ReactionNetwork& crn, const Vector& x, double delta) {
  check_delta(delta);
  const Vector root = propensities(crn, x).cwiseSqrt();
  return std::sqrt(delta) * (crn.V() * root.asDiagonal());
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(solver.eigenvalues().maxCoeff(), 0.0));
}

}  // namespace cle_ekf::crn
