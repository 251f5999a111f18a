#include "rbmpc/mpc.hpp"

#include <chrono>
#include <cmath>

namespace rbmpc {

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Warm start for window i+1: the tail [tau, T] of this window's control,
// padded with zeros where the new window extends past the old one.
Matrix shifted_tail(const Matrix& u, int keep_steps) {
  Matrix warm = Matrix::Zero(u.rows(), u.cols());
  const int remain = static_cast<int>(u.cols()) - keep_steps;
  warm.leftCols(remain) = u.rightCols(remain);
  return warm;
}

}  // namespace

void HorizonPlan::validate() const {
  if (dt <= 0.0 || T <= 0.0 || tau <= 0.0 || t_end <= 0.0 || h <= 0.0)
    fail(ErrorCode::GridMismatch, "plan lengths must be positive");
  if (tau > T * (1.0 + 1e-12))
    fail(ErrorCode::GridMismatch, "control horizon tau must not exceed the prediction horizon T");
  (void)exact_ratio(T, dt, "prediction horizon T over dt");
  (void)exact_ratio(tau, dt, "control horizon tau over dt");
  (void)exact_ratio(t_end, dt, "truncation t_end over dt");
  (void)exact_ratio(T, h, "prediction horizon T over h");
  (void)exact_ratio(h, dt, "RBM spacing h over dt");
  (void)exact_ratio(t_end, tau, "truncation t_end over tau");
}

int HorizonPlan::windows() const { return exact_ratio(t_end, tau, "t_end over tau"); }
int HorizonPlan::steps_per_window() const { return exact_ratio(T, dt, "T over dt"); }
int HorizonPlan::keep_steps() const { return exact_ratio(tau, dt, "tau over dt"); }

TimeGrid HorizonPlan::global_grid() const {
  return TimeGrid{0.0, dt, exact_ratio(t_end, dt, "t_end over dt")};
}

TimeGrid HorizonPlan::window_grid(int window_index) const {
  return TimeGrid{tau * static_cast<double>(window_index), dt, steps_per_window()};
}

namespace {

struct WindowOutcome {
  Matrix control;  // window control samples
  Matrix state;    // kept state samples (true dynamics for RBM)
};

template <typename SolveWindow>
MpcRun receding_horizon(const LqProblem& prob, const HorizonPlan& plan,
                        SolveWindow&& solve_window) {
  plan.validate();
  prob.validate();
  const TimeGrid grid = plan.global_grid();
  const int keep = plan.keep_steps();
  const int windows = plan.windows();

  MpcRun run;
  run.trajectory = make_trajectory(grid, prob.n(), prob.m());
  Vector x_cur = prob.x0;
  for (int i = 0; i < windows; ++i) {
    WindowOutcome out = solve_window(i, x_cur, run);
    const int g0 = i * keep;
    run.trajectory.controls.middleCols(g0, keep) = out.control.leftCols(keep);
    run.trajectory.states.middleCols(g0, keep) = out.state.leftCols(keep);
    x_cur = out.state.col(keep);
    if (i + 1 == windows) {
      run.trajectory.controls.col(g0 + keep) = out.control.col(keep);
      run.trajectory.states.col(g0 + keep) = x_cur;
    }
  }
  return run;
}

}  // namespace

MpcRun run_mpc(const LqProblem& prob, const HorizonPlan& plan, const MpcOptions& opts,
               CnCache* cache) {
  CnCache local;
  CnCache& cn = cache ? *cache : local;
  ConstantSparseGenerator gen(prob.A, kKeyProblemA);
  Matrix warm;
  const int keep = plan.keep_steps();

  return receding_horizon(prob, plan, [&](int i, const Vector& x_cur, MpcRun& run) {
    const auto t0 = std::chrono::steady_clock::now();
    const Matrix* warm_ptr = (opts.warm_start && i > 0) ? &warm : nullptr;
    OcpResult res = solve_ocp(prob, gen, x_cur, plan.window_grid(i), cn, opts.ocp, warm_ptr);
    run.per_window.push_back({i, res.iterations, res.converged, res.cost, res.grad_norm,
                              seconds_since(t0)});
    if (opts.warm_start) warm = shifted_tail(res.solution.controls, keep);
    return WindowOutcome{std::move(res.solution.controls), std::move(res.solution.states)};
  });
}

MpcRun run_rbm_mpc(const LqProblem& prob, const Splitting& splitting,
                   const HorizonPlan& plan, std::uint64_t seed, std::uint64_t realization,
                   const MpcOptions& opts, CnCache* cache, const RealizationLog* replay) {
  if (splitting.dimension() != prob.n())
    fail(ErrorCode::BadDimension, "splitting dimension does not match the problem");
  {
    SpMat dev = SpMat(splitting.sum - prob.A);
    double scale = 0.0, diff = 0.0;
    for (int k = 0; k < prob.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(prob.A, k); it; ++it)
        scale = std::max(scale, std::abs(it.value()));
    for (int k = 0; k < dev.outerSize(); ++k)
      for (SpMat::InnerIterator it(dev, k); it; ++it)
        diff = std::max(diff, std::abs(it.value()));
    if (diff > 1e-12 * std::max(1.0, scale))
      fail(ErrorCode::BadDimension, "splitting parts do not sum to the problem generator");
  }

  CnCache local;
  CnCache& cn = cache ? *cache : local;
  Matrix warm;
  const int keep = plan.keep_steps();
  const RngStream base(seed);

  return receding_horizon(prob, plan, [&](int i, const Vector& x_cur, MpcRun& run) {
    const auto t0 = std::chrono::steady_clock::now();
    RbmSchedule schedule;
    if (replay) {
      if (static_cast<size_t>(i) >= replay->schedules.size())
        fail(ErrorCode::GridMismatch, "replay log has fewer schedules than windows");
      schedule = replay->schedules[static_cast<size_t>(i)];
      schedule.h = plan.h;
      if (schedule.K != exact_ratio(plan.T, plan.h, "T over h"))
        fail(ErrorCode::GridMismatch, "replay schedule length does not match T/h");
      for (int pick : schedule.picks)
        if (pick < 0 || pick >= splitting.subset_count())
          fail(ErrorCode::BadDimension, "replay pick outside the listed subsets");
    } else {
      RngStream stream = base.substream({realization, static_cast<std::uint64_t>(i)});
      schedule = draw_schedule(splitting, plan.h, plan.T, plan.dt, stream);
      schedule.seed = seed;
    }

    RbmWindowGenerator gen(splitting, schedule, plan.dt);
    const Matrix* warm_ptr = (opts.warm_start && i > 0) ? &warm : nullptr;
    OcpResult res = solve_ocp(prob, gen, x_cur, plan.window_grid(i), cn, opts.ocp, warm_ptr);
    // Step 4: the kept state is y*_R, the true dynamics driven by u*_R.
    Trajectory rollout = rollout_true_dynamics(prob, res.solution.controls, x_cur,
                                               plan.window_grid(i), cn);
    run.per_window.push_back({i, res.iterations, res.converged, res.cost, res.grad_norm,
                              seconds_since(t0)});
    run.log.schedules.push_back(std::move(schedule));
    if (opts.warm_start) warm = shifted_tail(res.solution.controls, keep);
    return WindowOutcome{std::move(res.solution.controls), std::move(rollout.states)};
  });
}

MpcRun run_infinite_horizon(const LqProblem& prob, const StabilizedLoop& loop,
                            double t_end, double dt) {
  prob.validate();
  const TimeGrid grid{0.0, dt, exact_ratio(t_end, dt, "t_end over dt")};
  CnCache cache;
  ConstantDenseGenerator gen(loop.Ainf);
  const Matrix zeros = Matrix::Zero(prob.m(), grid.nodes());
  MpcRun run;
  run.trajectory = propagate(gen, prob.B, zeros, prob.x0, grid, cache);
  for (int k = 0; k < grid.nodes(); ++k)
    run.trajectory.controls.col(k) = -(loop.gain * run.trajectory.states.col(k));
  return run;
}

}  // namespace rbmpc
