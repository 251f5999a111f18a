#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rbmpc/config.hpp"
#include "rbmpc/harness.hpp"
#include "rbmpc/parallel.hpp"
#include "rbmpc/riccati.hpp"

namespace {

using namespace rbmpc;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::int64_t seed = -1;
  int jobs = -1;
};

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig config = flags.config_path.empty() ? RunConfig{} : RunConfig::load(flags.config_path);
  if (!flags.out.empty()) config.out = flags.out;
  if (flags.seed >= 0) config.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.jobs >= 0) config.jobs = flags.jobs;
  config.validate();
  return config;
}

int resolved_jobs(const RunConfig& config) {
  return config.jobs > 0 ? config.jobs : default_jobs();
}

void write_diagnostics_csv(const std::vector<WindowSummary>& rows, const std::string& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  f << "window,iterations,converged,cost,grad_norm,seconds\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g,%.17g,%.17g\n", r.window, r.iterations,
                  r.converged ? 1 : 0, r.cost, r.grad_norm, r.seconds);
    f << buf;
  }
}

int cmd_run(const std::string& mode, const CommonFlags& flags, const std::string& replay_log) {
  RunConfig config = resolve_config(flags);
  const ProblemBundle bundle = build_problem(config);
  std::string extra = "command = " + std::string(replay_log.empty() ? "run " + mode : "replay") + "\n";
  if (mode == "rbm-mpc") extra += "schedule_log = schedules.log\n";
  write_manifest(config, config.out, extra);
  const std::string dir = config.out;

  MpcOptions opts;
  opts.ocp.tol = config.tol;
  opts.ocp.max_iter = config.max_iter;
  opts.warm_start = config.warm_start;

  if (mode == "ocp") {
    CnCache cache;
    ConstantSparseGenerator gen(bundle.problem.A, kKeyProblemA);
    const TimeGrid grid = config.plan.global_grid();
    OcpResult res = solve_ocp(bundle.problem, gen, bundle.problem.x0, grid, cache, opts.ocp);
    write_trajectory_csv(res.solution, dir + "/trajectory.csv", config.csv_states);
    write_diagnostics_csv({{0, res.iterations, res.converged, res.cost, res.grad_norm, 0.0}},
                          dir + "/diagnostics.csv");
  } else if (mode == "mpc") {
    const MpcRun run = run_mpc(bundle.problem, config.plan, opts);
    write_trajectory_csv(run.trajectory, dir + "/trajectory.csv", config.csv_states);
    write_diagnostics_csv(run.per_window, dir + "/diagnostics.csv");
  } else if (mode == "rbm-mpc") {
    RealizationLog replay;
    const bool replaying = !replay_log.empty();
    if (replaying) replay = RealizationLog::load(replay_log);
    const MpcRun run =
        run_rbm_mpc(bundle.problem, bundle.splitting, config.plan, config.seed, 0, opts,
                    nullptr, replaying ? &replay : nullptr);
    write_trajectory_csv(run.trajectory, dir + "/trajectory.csv", config.csv_states);
    write_diagnostics_csv(run.per_window, dir + "/diagnostics.csv");
    run.log.save(dir + "/schedules.log");
  } else if (mode == "lqr") {
    const StabilizedLoop loop = solve_are(bundle.problem);
    const MpcRun run = run_infinite_horizon(bundle.problem, loop, config.plan.t_end,
                                            config.plan.dt);
    write_trajectory_csv(run.trajectory, dir + "/trajectory.csv", config.csv_states);
    std::ofstream f(dir + "/diagnostics.csv");
    if (!f) fail(ErrorCode::IoError, "cannot open diagnostics.csv");
    char buf[160];
    f << "mu_inf,M_inf,are_residual\n";
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", loop.mu_inf, loop.M_inf,
                  loop.residual);
    f << buf;
  } else {
    fail(ErrorCode::ConfigError, "mode must be one of ocp, mpc, rbm-mpc, lqr");
  }
  return 0;
}

int cmd_sweep(const std::string& axis_arg, const CommonFlags& flags) {
  RunConfig config = resolve_config(flags);
  if (!axis_arg.empty()) config.sweep_axis = axis_arg;

  SweepSettings settings;
  settings.axis = sweep_axis_from_string(config.sweep_axis);
  settings.values = config.sweep_values;
  settings.base_plan = config.plan;
  settings.n = config.n;
  settings.factory = [&config](int n) {
    RunConfig point_config = config;
    point_config.n = n;
    return build_problem(point_config);
  };
  settings.tol = config.tol;
  settings.max_iter = config.max_iter;
  settings.warm_start = config.warm_start;
  settings.realizations = config.realizations;
  settings.seed = config.seed;
  settings.explicit_seeds = config.seeds;
  settings.jobs = resolved_jobs(config);

  // Validate every point before any artifact is produced.
  for (double value : settings.values) {
    HorizonPlan plan = config.plan;
    switch (settings.axis) {
      case SweepAxis::H: plan.h = value; plan.dt = value; break;
      case SweepAxis::T: plan.T = value; break;
      case SweepAxis::Tau: plan.tau = value; break;
      case SweepAxis::N: break;
    }
    plan.validate();
  }

  write_manifest(config, config.out, "command = sweep " + config.sweep_axis + "\n");
  const auto points = sweep(settings);
  write_sweep_errors_csv(points, config.out + "/errors.csv");
  write_sweep_summary_csv(points, config.out + "/summary.csv");
  write_sweep_confidence_csv(points, config.out + "/confidence.csv");
  return 0;
}

int cmd_bench(const CommonFlags& flags) {
  RunConfig config = resolve_config(flags);
  BenchmarkSettings settings;
  settings.n_list = config.bench_n;
  settings.repeats = config.bench_repeats;
  settings.plan = config.plan;
  settings.tol = config.tol;
  settings.max_iter = config.max_iter;
  settings.seed = config.seed;
  settings.factory = [&config](int n) {
    RunConfig point_config = config;
    point_config.n = n;
    return build_problem(point_config);
  };

  write_manifest(config, config.out, "command = bench\n");
  const TimingReport report = benchmark(settings);
  write_timings_csv(report, config.out + "/timings.csv");
  write_timing_summary_csv(report, config.out + "/timing_summary.csv");
  for (int n : settings.n_list) {
    std::printf("n=%d: ocp %.3fs  mpc %.3fs  rbm-mpc %.3fs  (rbm-mpc speedup vs mpc: %.2fx)\n",
                n, report.stat("ocp", n).mean, report.stat("mpc", n).mean,
                report.stat("rbm-mpc", n).mean, report.speedup("rbm-mpc", "mpc", n));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RBM-MPC: randomized-batch model predictive control harness"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string mode, axis, replay_log;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "run configuration file");
    cmd->add_option("--seed", flags.seed, "override the base seed");
    cmd->add_option("--jobs", flags.jobs, "worker cap (1 = serial)");
    cmd->add_option("--out", flags.out, "artifact directory");
  };

  CLI::App* run = app.add_subcommand("run", "single trajectory run");
  run->add_option("mode", mode, "ocp | mpc | rbm-mpc | lqr")->required();
  add_common(run);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "parameter sweep with Monte-Carlo errors");
  sweep_cmd->add_option("axis", axis, "h | T | tau | n");
  add_common(sweep_cmd);

  CLI::App* bench = app.add_subcommand("bench", "timing comparison table");
  add_common(bench);

  CLI::App* replay = app.add_subcommand("replay", "re-run a saved schedule log");
  replay->add_option("--log", replay_log, "schedule log file")->required();
  add_common(replay);

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(mode, flags, "");
    if (sweep_cmd->parsed()) return cmd_sweep(axis, flags);
    if (bench->parsed()) return cmd_bench(flags);
    if (replay->parsed()) return cmd_run("rbm-mpc", flags, replay_log);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const rbmpc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
