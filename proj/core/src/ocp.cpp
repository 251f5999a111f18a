#include "rbmpc/ocp.hpp"

#include <cmath>

namespace rbmpc {

OcpResult solve_ocp(const LqProblem& prob, const StepGenerator& gen,
                    const Vector& x_init, const TimeGrid& grid, CnCache& cache,
                    const OcpOptions& opts, const Matrix* warm_start) {
  const int m = prob.m();
  if (warm_start && (warm_start->rows() != m || warm_start->cols() != grid.nodes()))
    fail(ErrorCode::BadDimension, "warm start must be sampled on the window grid");

  Matrix u = warm_start ? *warm_start : Matrix::Zero(m, grid.nodes());
  Trajectory x = propagate(gen, prob.B, u, x_init, grid, cache);
  double cost = trapz_quadratic(x, prob.Q, prob.W, prob.F);

  OcpResult result;
  double grad_norm = 0.0;
  int it = 0;
  bool converged = false;
  for (it = 1; it <= opts.max_iter; ++it) {
    const Matrix d = discrete_cost_gradient(gen, prob.B, prob.Q, prob.W, prob.F, x, u, cache);
    const double dn2 = l2_trapz_norm2(d, grid);
    grad_norm = std::sqrt(dn2);
    if (!(dn2 > 0.0)) {
      converged = true;
      break;
    }
    // Homogeneous cost of the direction gives the curvature along it.
    Trajectory xd = propagate(gen, prob.B, d, Vector::Zero(prob.n()), grid, cache);
    const double curvature = trapz_quadratic(xd, prob.Q, prob.W, prob.F);
    if (!(curvature > 1e-300 * dn2))
      fail(ErrorCode::LineSearchDegenerate,
           "direction has nonpositive curvature; W should make this impossible");
    const double alpha = dn2 / (2.0 * curvature);

    const Matrix u_new = u - alpha * d;
    const double change = std::sqrt(l2_trapz_norm2(u_new - u, grid));
    const double scale = std::sqrt(l2_trapz_norm2(u_new, grid));
    u = u_new;
    x = propagate(gen, prob.B, u, x_init, grid, cache);
    cost = trapz_quadratic(x, prob.Q, prob.W, prob.F);
    if (opts.on_iteration) opts.on_iteration(it, cost);
    if (change <= opts.tol * std::max(scale, 1e-300)) {
      converged = true;
      break;
    }
  }

  result.solution = std::move(x);
  result.cost = cost;
  result.iterations = std::min(it, opts.max_iter);
  result.converged = converged;
  result.grad_norm = grad_norm;
  return result;
}

Trajectory rollout_true_dynamics(const LqProblem& prob, const Matrix& control,
                                 const Vector& x_init, const TimeGrid& grid,
                                 CnCache& cache) {
  ConstantSparseGenerator gen(prob.A, kKeyProblemA);
  return propagate(gen, prob.B, control, x_init, grid, cache);
}

}  // namespace rbmpc
