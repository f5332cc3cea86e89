#pragma once

// Damped least squares (Levenberg-Marquardt with Marquardt diagonal scaling).

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace nfcav::lm {

/// Fills residuals (size m) and, when `jacobian` is non-null, the m x n
/// Jacobian d(residual)/d(param).
using ResidualFn =
    std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian)>;

struct Options {
  int max_iterations = 200;
  double relative_step = 1e-8;
  double initial_damping = 1e-3;
};

struct Result {
  Eigen::VectorXd params;
  /// s^2 (J^T J)^{-1} with s^2 = cost / (m - n).
  Eigen::MatrixXd covariance;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  /// Cost after the initial evaluation and after every accepted step.
  std::vector<double> cost_trace;
};

/// Throws nfcav::GuardError if the normal equations are singular at the
/// starting point.
Result minimize(const ResidualFn& fn, Eigen::VectorXd start, std::size_t num_residuals,
                const Options& opts = {});

}  // namespace nfcav::lm
