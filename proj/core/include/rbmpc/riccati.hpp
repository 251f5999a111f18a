#pragma once

#include <vector>

#include "rbmpc/integrator.hpp"
#include "rbmpc/system_model.hpp"
#include "rbmpc/types.hpp"

namespace rbmpc {

// Backward-in-time samples of a Riccati differential equation solution,
// P[k] at grid node k with P[steps] equal to the terminal weight.
struct RiccatiPath {
  TimeGrid grid;
  std::vector<Matrix> P;

  const Matrix& at(int k) const { return P.at(static_cast<size_t>(k)); }
};

// Infinite-horizon loop data: ARE solution, closed-loop generator and the
// constants of its exponential bound |e^{A_inf t}| <= M_inf e^{-mu_inf t}.
struct StabilizedLoop {
  Matrix Pinf;
  Matrix Ainf;
  Matrix gain;  // W^{-1} B^T Pinf
  double mu_inf = 0.0;
  double M_inf = 1.0;
  double residual = 0.0;
};

struct RdeOptions {
  double blowup = 1e12;      // finite-escape guard on |P|
  double local_tol = 1e-11;  // step-doubling acceptance, relative to |P|
  int max_refine_level = 12; // substep count capped at 4^level
  int initial_substeps = 1;
};

// Backward RK4 integration of the (R)RDE
//   -P' = G(t)' P + P G(t) - P B W^{-1} B' P + Q,   P(T) = terminal,
// with per-step substep refinement (x4) until the step-doubling residual
// check passes, and symmetrization after every step.
RiccatiPath solve_rde(const LqProblem& prob, const StepGenerator& gen,
                      const TimeGrid& grid, const Matrix& terminal,
                      const RdeOptions& opts = {});
RiccatiPath solve_rde(const LqProblem& prob, const StepGenerator& gen,
                      const TimeGrid& grid);

struct AreOptions {
  double residual_tol_rel = 1e-8;  // vs |Q|
  int max_sign_iters = 120;
  int max_newton_iters = 12;
};

// ARE solve via the matrix sign function of the Hamiltonian with determinant
// scaling, polished by Newton-Kleinman iterations (each one a Lyapunov solve).
StabilizedLoop solve_are(const LqProblem& prob, const AreOptions& opts = {});

// Long-horizon RDE limit with terminal 0 (validation route for solve_are).
// Stops when |P_k - P_{k+1}| <= 1e-10 |P| for 10 consecutive steps;
// max_steps = 0 means the default 10*n.
Matrix solve_are_rde_limit(const LqProblem& prob, double dt, int max_steps = 0);

// Lyapunov equation Acl' X + X Acl + C = 0 for Hurwitz Acl (complex-Schur
// Bartels-Stewart).
Matrix solve_lyapunov(const Matrix& Acl, const Matrix& C);

// u = -W^{-1} B' P x.
Vector feedback_control(const Matrix& P, const LqProblem& prob, const Vector& x);

// ARE residual A'P + PA - P B W^{-1} B' P + Q in the spectral norm.
double are_residual(const LqProblem& prob, const Matrix& P);

}  // namespace rbmpc
