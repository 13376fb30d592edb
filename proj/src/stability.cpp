#include "cle_ekf/stability.hpp"

#include "cle_ekf/errors.hpp"
#include "cle_ekf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cle_ekf::stability {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(std::string(field) + ": " + what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }
bool finite_pos(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void validate(const StabilityParams& p) {
  require(std::isfinite(p.L_f) && p.L_f > 0.0, "L_f", "must be positive and finite");
  if (p.L_f >= 1.0) throw InfeasibleError("drift not contractive; bound theory inapplicable (L_f >= 1)");
  require(finite_nonneg(p.L_a), "L_a", "must be nonnegative and finite");
  require(finite_pos(p.v_bound), "v_bound", "must be positive and finite");
  require(finite_nonneg(p.C_A), "C_A", "must be nonnegative and finite");
  require(finite_pos(p.r_lb), "r_lb", "must be positive and finite");
  require(finite_pos(p.r_ub), "r_ub", "must be positive and finite");
  require(p.r_lb <= p.r_ub, "r_ub", "must be at least r_lb");
  require(finite_pos(p.c_bound), "c_bound", "must be positive and finite");
  require(p.m >= 1, "m", "must be at least 1");
  require(p.p >= 1, "p", "must be at least 1");
  require(!p.m1 || finite_nonneg(*p.m1), "m1", "must be nonnegative and finite");
  require(!p.m2 || finite_nonneg(*p.m2), "m2", "must be nonnegative and finite");
  require(!p.m3 || finite_nonneg(*p.m3), "m3", "must be nonnegative and finite");
  require(!p.m4 || finite_nonneg(*p.m4), "m4", "must be nonnegative and finite");
}

DerivedConstants derive_constants(const StabilityParams& p) {
  validate(p);
  DerivedConstants d;
  const double v2 = p.v_bound * p.v_bound;
  d.rho = p.c_bound / p.r_lb;
  d.r_s = p.r_ub / p.r_lb;
  d.beta0 = v2 * p.L_a;
  d.beta1 = v2 * p.C_A / (1.0 - p.L_f * p.L_f);
  d.beta = d.beta0 * d.rho * p.c_bound;
  d.c2 = d.beta1 * d.rho * p.c_bound;
  return d;
}

Coefficients polynomial_coefficients(const StabilityParams& p) {
  const DerivedConstants d = derive_constants(p);
  if (!p.m1) throw ConfigError("m1: required moment bound is missing");
  if (!p.m2) throw ConfigError("m2: required moment bound is missing");
  const double m = p.m;
  const double pp = p.p;
  const double m1 = *p.m1;
  const double m2 = *p.m2;
  const double lf2 = p.L_f * p.L_f;
  const double v2 = p.v_bound * p.v_bound;
  const double b = d.beta;

  const double a3 = m * v2 * p.C_A * b * b + d.beta0 * b * (2.0 * m * d.c2 + m * m1 * b);
  const double a2 = d.c2 * d.c2 * lf2 + (2.0 * m + pp * d.r_s) * d.beta0 * b + b * b * lf2 * (m1 * m1 + 6.0 * m2) +
                    2.0 * b * lf2 * m1 * d.c2;
  const double a1 = 2.0 * d.c2 * lf2 + 2.0 * b * lf2 * m1;
  const double a0 = lf2 - 1.0;
  return {a3, a2, a1, a0};
}

double evaluate(const Coefficients& c, double delta) noexcept {
  return ((c[0] * delta + c[1]) * delta + c[2]) * delta + c[3];
}

std::array<int, 4> sign_pattern(const Coefficients& c) noexcept {
  std::array<int, 4> s{};
  for (std::size_t i = 0; i < 4; ++i) s[i] = (c[i] > 0.0) - (c[i] < 0.0);
  return s;
}

int sign_changes(const Coefficients& c) noexcept {
  int changes = 0;
  int last = 0;
  for (int s : sign_pattern(c)) {
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

double positive_root(const Coefficients& c) {
  if (!(c[3] < 0.0) || sign_changes(c) != 1) {
    throw InfeasibleError("polynomial does not have exactly one sign change with a negative constant term");
  }
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; evaluate(c, hi) <= 0.0; ++i) {
    if (i > 2000 || !std::isfinite(hi)) throw NumericalError("failed to bracket the positive root");
    hi *= 2.0;
  }
  // Bisect to full double resolution; this is well below the 1e-9 relative target.
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (evaluate(c, mid) <= 0.0 ? lo : hi) = mid;
  }
  return std::abs(evaluate(c, lo)) <= std::abs(evaluate(c, hi)) ? lo : hi;
}

double delta_max(const StabilityParams& params) { return positive_root(polynomial_coefficients(params)); }

double gamma(const StabilityParams& params, double delta) {
  if (!(delta >= 0.0)) throw ConfigError("delta must be nonnegative");
  return 1.0 + evaluate(polynomial_coefficients(params), delta);
}

StabilityReport certify(const StabilityParams& params) {
  StabilityReport report;
  report.coefficients = polynomial_coefficients(params);
  report.sign_pattern = sign_pattern(report.coefficients);
  report.delta_max = positive_root(report.coefficients);
  return report;
}

BoundEstimates estimate_bounds(const crn::ReactionNetwork& crn, std::span<const std::pair<double, double>> box,
                               double delta, std::size_t samples, std::uint64_t seed) {
  const std::size_t n = crn.species_count();
  if (box.size() != n) throw ConfigError("box must give one interval per species");
  for (const auto& [lo, hi] : box) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) throw ConfigError("box intervals must be finite with lo <= hi");
  }
  if (samples < 100) throw ConfigError("samples must be at least 100");
  if (!(delta > 0.0)) throw ConfigError("time step must be positive");

  BoundEstimates est;
  est.v_bound = crn::spectral_norm(crn.V());
  const auto idn = crn::Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  auto visit = [&](const crn::Vector& x) {
    const crn::Matrix jac = crn::propensity_jacobian(crn, x);
    est.L_a = std::max(est.L_a, crn::spectral_norm(jac));
    est.L_f = std::max(est.L_f, crn::spectral_norm(idn + delta * (crn.V() * jac)));
    est.C_A = std::max(est.C_A, crn::propensities(crn, x).norm());
    ++est.samples;
  };

  crn::Vector x(static_cast<Eigen::Index>(n));
  if (n <= 16) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      for (std::size_t i = 0; i < n; ++i) x[static_cast<Eigen::Index>(i)] = (mask >> i) & 1u ? box[i].second : box[i].first;
      visit(x);
    }
  }
  const rng::NormalSource source(seed, rng::Stream::sampling);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = source.uniform(s, static_cast<std::uint32_t>(i));
      x[static_cast<Eigen::Index>(i)] = box[i].first + u * (box[i].second - box[i].first);
    }
    visit(x);
  }

  est.L_f *= kBoundInflation;
  est.L_a *= kBoundInflation;
  est.C_A *= kBoundInflation;
  est.contractive = est.L_f < 1.0;
  return est;
}

BoundCheck check_exponential_bound(std::span<const double> mse, double gamma) {
  if (mse.empty()) throw ConfigError("mse series is empty");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  for (double v : mse) {
    if (!std::isfinite(v)) throw NumericalError("mse series has non-finite entries");
  }
  const std::size_t n = mse.size();
  const std::size_t quarter = std::max<std::size_t>(1, n / 4);
  const auto tail = mse.subspan(n - quarter);
  const double tail_mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(quarter);
  const double tail_max = *std::max_element(tail.begin(), tail.end());

  BoundCheck out;
  double decay = 1.0;
  out.C0 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    out.C0 = std::max(out.C0, mse[k] - decay * mse[0]);
    decay *= gamma;
  }

  std::size_t end = 0;
  while (end < n && !(mse[end] < 1.05 * tail_mean)) ++end;
  out.transient_length = std::min(end + 1, n);

  // Decreasing upper envelope: suffix maxima.
  std::vector<double> envelope(n);
  double running = -std::numeric_limits<double>::infinity();
  for (std::size_t k = n; k-- > 0;) {
    running = std::max(running, mse[k]);
    envelope[k] = running;
  }
  std::size_t fit_len = 0;
  while (fit_len < out.transient_length && envelope[fit_len] > 0.0) ++fit_len;
  if (fit_len >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < fit_len; ++k) {
      const double xk = static_cast<double>(k);
      const double yk = std::log(envelope[k]);
      sx += xk;
      sy += yk;
      sxx += xk * xk;
      sxy += xk * yk;
    }
    const double len = static_cast<double>(fit_len);
    const double slope = (len * sxy - sx * sy) / (len * sxx - sx * sx);
    out.empirical_gamma = std::exp(slope);
  } else {
    out.empirical_gamma = std::numeric_limits<double>::quiet_NaN();
  }

  // Over the final quarter the bound gamma^k mse_0 + C0 is largest at its first index.
  const double tail_allowance = std::pow(gamma, static_cast<double>(n - quarter)) * mse[0];
  const double scale = std::max(1.0, *std::max_element(mse.begin(), mse.end()));
  out.satisfied = std::isfinite(out.C0) && tail_max <= out.C0 + tail_allowance + 1e-12 * scale;
  return out;
}

}  // namespace cle_ekf::stability
