#pragma once

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace cle_ekf::crn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Evaluates to x[index].
struct SpeciesValue {
  std::size_t index = 0;
};

/// Evaluates to total - x[index]. Used for conserved-total propensities.
struct Complement {
  double total = 0.0;
  std::size_t index = 0;
};

using Factor = std::variant<SpeciesValue, Complement>;

double factor_value(const Factor& factor, const Vector& x);
/// d(factor)/d(x[factor index]); +1 for SpeciesValue, -1 for Complement.
double factor_slope(const Factor& factor);
std::size_t factor_index(const Factor& factor);

/// One reaction channel: propensity = coefficient * prod(factors).
struct Reaction {
  double coefficient = 0.0;
  std::vector<Factor> factors;
};

/**
 * Chemical reaction network with product-of-affine-factor propensities.
 *
 * The stoichiometric matrix has one row per species and one column per
 * reaction. Instances are immutable after construction; the constructor
 * validates every invariant and throws ConfigError on violation.
 */
class ReactionNetwork {
 public:
  ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions,
                  Eigen::MatrixXi stoichiometry);

  std::size_t species_count() const noexcept { return species_.size(); }
  std::size_t reaction_count() const noexcept { return reactions_.size(); }

  const std::vector<std::string>& species() const noexcept { return species_; }
  const std::vector<Reaction>& reactions() const noexcept { return reactions_; }
  const Eigen::MatrixXi& stoichiometry() const noexcept { return stoich_; }
  /// The stoichiometric matrix as doubles, for linear algebra.
  const Matrix& V() const noexcept { return stoich_real_; }

  /// Index of a species by name; throws ConfigError if unknown.
  std::size_t species_index(const std::string& name) const;

 private:
  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
  Eigen::MatrixXi stoich_;
  Matrix stoich_real_;
};

/// Unclamped coefficient * prod(factors) for every reaction.
Vector raw_propensities(const ReactionNetwork& crn, const Vector& x);

/// Propensity vector with each entry clamped at zero.
Vector propensities(const ReactionNetwork& crn, const Vector& x);

/// m x n Jacobian of the propensity vector. Rows of reactions whose raw
/// propensity is negative (clamped) are zero.
Matrix propensity_jacobian(const ReactionNetwork& crn, const Vector& x);

/// x + delta * V * propensities(x).
Vector drift(const ReactionNetwork& crn, const Vector& x, double delta);

/// sqrt(delta) * V * diag(sqrt(propensities(x))), an n x m matrix.
Matrix diffusion(const ReactionNetwork& crn, const Vector& x, double delta);

/// Largest singular value, from a symmetric eigensolve of the smaller Gram matrix.
double spectral_norm(const Matrix& m);

}  // namespace cle_ekf::crn
