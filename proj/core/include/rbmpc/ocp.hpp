#pragma once

#include <functional>

#include "rbmpc/integrator.hpp"
#include "rbmpc/system_model.hpp"
#include "rbmpc/types.hpp"

namespace rbmpc {

struct OcpOptions {
  double tol = 1e-5;    // relative L2 change of the control
  int max_iter = 1000;
  // Optional per-iteration hook (iteration, cost); used by tests.
  std::function<void(int, double)> on_iteration;
};

struct OcpResult {
  Trajectory solution;  // states under the OCP generator, controls u*
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;  // L2 norm of the final descent direction
};

// Steepest descent on the trapezoidal CN cost with adjoint gradients and the
// closed-form exact line search for quadratic functionals:
//   alpha* = |d|_L2^2 / (2 Jhat(d)),
// where Jhat(d) is the homogeneous cost of the direction (zero initial state).
// Stops when the relative L2 change of u drops below tol or at max_iter.
OcpResult solve_ocp(const LqProblem& prob, const StepGenerator& gen,
                    const Vector& x_init, const TimeGrid& grid, CnCache& cache,
                    const OcpOptions& opts = {}, const Matrix* warm_start = nullptr);

// Propagates the true generator A under a given control (y*_R when the
// control came from an RBM-constrained solve).
Trajectory rollout_true_dynamics(const LqProblem& prob, const Matrix& control,
                                 const Vector& x_init, const TimeGrid& grid,
                                 CnCache& cache);

}  // namespace rbmpc
