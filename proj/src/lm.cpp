#include "nfcav/lm.hpp"

#include <cmath>

#include "nfcav/core.hpp"

namespace nfcav::lm {

Result minimize(const ResidualFn& fn, Eigen::VectorXd start, std::size_t num_residuals, const Options& opts) {
  const Eigen::Index n = start.size();
  const auto m = static_cast<Eigen::Index>(num_residuals);
  if (m < n) throw InputError("fewer residuals than parameters");

  Eigen::VectorXd p = std::move(start);
  Eigen::VectorXd r(m), r_try(m);
  Eigen::MatrixXd jac(m, n);
  fn(p, r, &jac);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) throw GuardError("non-finite residuals at the starting point");

  Result out;
  out.cost_trace.push_back(cost);

  Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::VectorXd grad = jac.transpose() * r;
  {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (lu.rank() < n) throw GuardError("singular normal equations");
  }

  double lambda = opts.initial_damping;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    Eigen::MatrixXd a = jtj;
    for (Eigen::Index i = 0; i < n; ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-300);
    const Eigen::VectorXd step = a.ldlt().solve(-grad);
    if (!step.allFinite()) {
      lambda *= 10.0;
      if (lambda > 1e20) break;
      continue;
    }
    const bool small = step.norm() <= opts.relative_step * (p.norm() + opts.relative_step);
    const Eigen::VectorXd trial = p + step;
    fn(trial, r_try, nullptr);
    const double trial_cost = r_try.squaredNorm();
    if (std::isfinite(trial_cost) && trial_cost <= cost) {
      p = trial;
      fn(p, r, &jac);
      cost = r.squaredNorm();
      jtj = jac.transpose() * jac;
      grad = jac.transpose() * r;
      out.cost_trace.push_back(cost);
      lambda = std::max(lambda / 10.0, 1e-15);
    } else {
      lambda *= 10.0;
    }
    if (small) {
      out.converged = true;
      break;
    }
    if (lambda > 1e20) {
      // No descent direction left at any damping: a stationary point.
      out.converged = grad.norm() <= 1e-10 * (1.0 + cost);
      break;
    }
  }

  out.params = p;
  out.cost = cost;
  out.iterations = it;
  const double dof = static_cast<double>(m - n);
  const double s2 = dof > 0 ? cost / dof : 0.0;
  out.covariance = s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
  return out;
}

}  // namespace nfcav::lm
