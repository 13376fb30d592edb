#pragma once

// Reference implementations that share no code path with the library.

#include "cle_ekf/crn.hpp"

#include <cmath>
#include <vector>

namespace cle_ekf::testing {

/// delta * V * diag(a) * V^T with explicit loops over the clamped propensities.
inline Eigen::MatrixXd dense_process_noise(const Eigen::MatrixXi& V, const Eigen::VectorXd& a, double delta) {
  const auto n = V.rows();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < V.cols(); ++j) acc += V(r, j) * std::max(a[j], 0.0) * V(c, j);
      q(r, c) = delta * acc;
    }
  }
  return q;
}

/**
 * Linear Kalman filter for a network whose propensities are affine,
 * a(x) = offset + slope * x, written with plain loops and the Joseph-free
 * textbook update. The process noise is evaluated at the previous posterior.
 */
class LinearKalmanOracle {
 public:
  LinearKalmanOracle(Eigen::MatrixXi V, Eigen::VectorXd offset, Eigen::MatrixXd slope, double delta)
      : V_(std::move(V)), offset_(std::move(offset)), slope_(std::move(slope)), delta_(delta) {
    const auto n = V_.rows();
    F_ = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < V_.cols(); ++j) acc += V_(r, j) * slope_(j, c);
        F_(r, c) += delta_ * acc;
      }
    }
  }

  void predict(Eigen::VectorXd& x, Eigen::MatrixXd& P) const {
    const Eigen::VectorXd a = offset_ + slope_ * x;
    Eigen::VectorXd next = x;
    for (Eigen::Index r = 0; r < x.size(); ++r) {
      for (Eigen::Index j = 0; j < V_.cols(); ++j) next[r] += delta_ * V_(r, j) * a[j];
    }
    const Eigen::MatrixXd Q = dense_process_noise(V_, a, delta_);
    P = (F_ * P * F_.transpose() + Q).eval();
    x = next;
  }

  static void correct(Eigen::VectorXd& x, Eigen::MatrixXd& P, const Eigen::VectorXd& y, const Eigen::MatrixXd& C,
                      const Eigen::MatrixXd& R) {
    const Eigen::MatrixXd S = C * P * C.transpose() + R;
    const Eigen::MatrixXd K = P * C.transpose() * S.inverse();
    x = (x + K * (y - C * x)).eval();
    const auto n = P.rows();
    P = ((Eigen::MatrixXd::Identity(n, n) - K * C) * P).eval();
    P = (0.5 * (P + P.transpose())).eval();
  }

 private:
  Eigen::MatrixXi V_;
  Eigen::VectorXd offset_;
  Eigen::MatrixXd slope_;
  Eigen::MatrixXd F_;
  double delta_;
};

}  // namespace cle_ekf::testing
