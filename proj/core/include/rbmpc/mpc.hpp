#pragma once

#include <cstdint>
#include <vector>

#include "rbmpc/ocp.hpp"
#include "rbmpc/riccati.hpp"
#include "rbmpc/sampler.hpp"
#include "rbmpc/system_model.hpp"

namespace rbmpc {

// Receding-horizon layout: prediction horizon T, control horizon tau,
// truncation t_end, integrator step dt, RBM spacing h.
struct HorizonPlan {
  double T = 15.0;
  double tau = 10.0;
  double t_end = 200.0;
  double dt = 1.0;
  double h = 1.0;

  void validate() const;
  int windows() const;           // t_end / tau
  int steps_per_window() const;  // T / dt
  int keep_steps() const;        // tau / dt
  TimeGrid global_grid() const;
  TimeGrid window_grid(int window_index) const;
};

struct WindowSummary {
  int window = 0;
  int iterations = 0;
  bool converged = false;
  double cost = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;
};

struct MpcRun {
  Trajectory trajectory;  // stitched state and control on [0, t_end]
  RealizationLog log;     // one schedule per window; empty for classical MPC
  std::vector<WindowSummary> per_window;
};

struct MpcOptions {
  OcpOptions ocp;
  bool warm_start = false;
};

// Classical MPC: per window solve the OCP under the true generator A, keep
// control and state on [tau_{i-1}, tau_i] (right-continuous stitching: the
// node at tau_i carries the incoming window's value).
MpcRun run_mpc(const LqProblem& prob, const HorizonPlan& plan,
               const MpcOptions& opts = {}, CnCache* cache = nullptr);

// RBM-MPC: per window draw a schedule (substream of (seed, realization,
// window)), solve the OCP under A_R, roll the true dynamics under the
// RBM-optimized control, and keep that trajectory. A replay log substitutes
// the stored picks for fresh draws.
MpcRun run_rbm_mpc(const LqProblem& prob, const Splitting& splitting,
                   const HorizonPlan& plan, std::uint64_t seed,
                   std::uint64_t realization = 0, const MpcOptions& opts = {},
                   CnCache* cache = nullptr, const RealizationLog* replay = nullptr);

// Infinite-horizon baseline: closed-loop CN rollout of A_inf with
// u = -W^{-1} B' Pinf x.
MpcRun run_infinite_horizon(const LqProblem& prob, const StabilizedLoop& loop,
                            double t_end, double dt);

}  // namespace rbmpc
