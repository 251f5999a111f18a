#include "rbmpc/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rbmpc/parallel.hpp"

namespace rbmpc {

double l2_time_norm(const Matrix& signal, const TimeGrid& grid) {
  if (signal.cols() == 0) fail(ErrorCode::BadDimension, "empty signal");
  return std::sqrt(l2_trapz_norm2(signal, grid));
}

double linf_scaled_norm(const Matrix& states, const TimeGrid& grid) {
  if (states.cols() != grid.nodes()) fail(ErrorCode::BadDimension, "signal does not match grid");
  const double n = static_cast<double>(states.rows());
  double best = 0.0;
  for (int k = 0; k < states.cols(); ++k)
    best = std::max(best, states.col(k).squaredNorm() / n);
  return std::sqrt(best);
}

double relative_error(const Matrix& a, const Matrix& ref, const TimeGrid& grid,
                      NormKind kind) {
  if (a.rows() != ref.rows() || a.cols() != ref.cols() || a.cols() != grid.nodes())
    fail(ErrorCode::GridMismatch, "relative error needs both signals on the same grid");
  const auto norm = [&](const Matrix& s) {
    return kind == NormKind::L2Time ? l2_time_norm(s, grid) : linf_scaled_norm(s, grid);
  };
  const double ref_norm = norm(ref);
  if (ref_norm == 0.0) fail(ErrorCode::ZeroReference, "reference signal has zero norm");
  return norm(a - ref) / ref_norm;
}

Stat sample_stat(const std::vector<double>& values) {
  Stat s;
  s.count = static_cast<int>(values.size());
  if (s.count == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (s.count - 1));
  }
  return s;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double two_sigma = 0.0;
};

LineFit least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const int k = static_cast<int>(xs.size());
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < k; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < k; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) fail(ErrorCode::BadDimension, "degenerate abscissa in fit");
  LineFit fit;
  fit.slope = sxy / sxx;
  if (k > 2) {
    const double intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (int i = 0; i < k; ++i) {
      const double r = ys[i] - (intercept + fit.slope * xs[i]);
      rss += r * r;
    }
    fit.two_sigma = 2.0 * std::sqrt(rss / (k - 2) / sxx);
  }
  return fit;
}

FitResult fit_transformed(const std::vector<FitPoint>& points, bool log_x, double sign) {
  if (points.size() < 3) fail(ErrorCode::BadDimension, "fits need at least 3 points");
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    if (p.mean <= 0.0 || p.x <= 0.0)
      fail(ErrorCode::BadDimension, "fit points must be positive");
    xs.push_back(log_x ? std::log(p.x) : p.x);
    ys.push_back(std::log(p.mean));
  }
  const LineFit lf = least_squares_slope(xs, ys);
  FitResult out;
  out.value = sign * lf.slope;
  out.confidence = lf.two_sigma;
  out.points = points;
  return out;
}

}  // namespace

FitResult fit_loglog_slope(const std::vector<FitPoint>& points) {
  return fit_transformed(points, true, 1.0);
}

FitResult fit_exp_rate(const std::vector<FitPoint>& points) {
  return fit_transformed(points, false, -1.0);
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "h") return SweepAxis::H;
  if (name == "T") return SweepAxis::T;
  if (name == "tau") return SweepAxis::Tau;
  if (name == "n") return SweepAxis::N;
  fail(ErrorCode::ConfigError, "unknown sweep axis: " + name);
}

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::H: return "h";
    case SweepAxis::T: return "T";
    case SweepAxis::Tau: return "tau";
    case SweepAxis::N: return "n";
  }
  return "?";
}

namespace {

ProblemBundle default_factory(int n) {
  auto [prob, split] = heat_ring_example(n);
  return ProblemBundle{std::move(prob), std::move(split)};
}

HorizonPlan plan_for_value(const SweepSettings& s, double value) {
  HorizonPlan plan = s.base_plan;
  switch (s.axis) {
    case SweepAxis::H:
      // The RBM spacing is refined jointly with the integrator step.
      plan.h = value;
      plan.dt = value;
      break;
    case SweepAxis::T:
      plan.T = value;
      break;
    case SweepAxis::Tau:
      plan.tau = value;
      break;
    case SweepAxis::N:
      break;
  }
  return plan;
}

}  // namespace

std::vector<SweepPoint> sweep(const SweepSettings& settings) {
  if (settings.values.empty()) fail(ErrorCode::ConfigError, "sweep needs parameter values");
  if (settings.realizations < 1) fail(ErrorCode::ConfigError, "realizations must be >= 1");
  auto factory = settings.factory ? settings.factory : default_factory;

  std::vector<SweepPoint> points;
  ProblemBundle bundle;
  StabilizedLoop loop;
  bool have_bundle = false;

  for (double value : settings.values) {
    const HorizonPlan plan = plan_for_value(settings, value);
    plan.validate();
    const int n = settings.axis == SweepAxis::N ? static_cast<int>(value) : settings.n;
    if (!have_bundle || settings.axis == SweepAxis::N) {
      bundle = factory(n);
      loop = solve_are(bundle.problem);
      have_bundle = true;
    }

    MpcOptions opts;
    opts.ocp.tol = settings.tol;
    opts.ocp.max_iter = settings.max_iter;
    opts.warm_start = settings.warm_start;

    const MpcRun inf = run_infinite_horizon(bundle.problem, loop, plan.t_end, plan.dt);
    const MpcRun mpc = run_mpc(bundle.problem, plan, opts);
    const TimeGrid grid = plan.global_grid();

    SweepPoint point;
    point.parameter = value;
    point.report.rel_u_m_vs_inf = Stat{
        relative_error(mpc.trajectory.controls, inf.trajectory.controls, grid,
                       NormKind::L2Time),
        0.0, 1};
    point.report.rel_x_m_vs_inf = Stat{
        relative_error(mpc.trajectory.states, inf.trajectory.states, grid,
                       NormKind::LinfScaled),
        0.0, 1};

    const int R = settings.explicit_seeds.empty()
                      ? settings.realizations
                      : static_cast<int>(settings.explicit_seeds.size());
    point.u_rm_inf.resize(R);
    point.u_rm_m.resize(R);
    point.x_rm_inf.resize(R);
    point.x_rm_m.resize(R);
    parallel_for(settings.jobs, R, [&](int r) {
      CnCache cache;
      const std::uint64_t seed_r = settings.explicit_seeds.empty()
                                       ? settings.seed
                                       : settings.explicit_seeds[static_cast<size_t>(r)];
      const std::uint64_t realization_r =
          settings.explicit_seeds.empty() ? static_cast<std::uint64_t>(r) : 0;
      const MpcRun rbm = run_rbm_mpc(bundle.problem, bundle.splitting, plan, seed_r,
                                     realization_r, opts, &cache);
      point.u_rm_inf[r] = relative_error(rbm.trajectory.controls, inf.trajectory.controls,
                                         grid, NormKind::L2Time);
      point.u_rm_m[r] = relative_error(rbm.trajectory.controls, mpc.trajectory.controls,
                                       grid, NormKind::L2Time);
      point.x_rm_inf[r] = relative_error(rbm.trajectory.states, inf.trajectory.states,
                                         grid, NormKind::LinfScaled);
      point.x_rm_m[r] = relative_error(rbm.trajectory.states, mpc.trajectory.states,
                                       grid, NormKind::LinfScaled);
    });
    point.report.rel_u_rm_vs_inf = sample_stat(point.u_rm_inf);
    point.report.rel_u_rm_vs_m = sample_stat(point.u_rm_m);
    point.report.rel_x_rm_vs_inf = sample_stat(point.x_rm_inf);
    point.report.rel_x_rm_vs_m = sample_stat(point.x_rm_m);
    points.push_back(std::move(point));
  }
  return points;
}

namespace {

void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

struct MetricRef {
  const char* name;
  const Stat* stat;
  const std::vector<double>* raw;  // null for deterministic rows
};

std::vector<MetricRef> metric_table(const SweepPoint& p) {
  return {
      {"rel_u_rm_vs_inf", &p.report.rel_u_rm_vs_inf, &p.u_rm_inf},
      {"rel_u_rm_vs_m", &p.report.rel_u_rm_vs_m, &p.u_rm_m},
      {"rel_u_m_vs_inf", &p.report.rel_u_m_vs_inf, nullptr},
      {"rel_x_rm_vs_inf", &p.report.rel_x_rm_vs_inf, &p.x_rm_inf},
      {"rel_x_rm_vs_m", &p.report.rel_x_rm_vs_m, &p.x_rm_m},
      {"rel_x_m_vs_inf", &p.report.rel_x_m_vs_inf, nullptr},
  };
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  return f;
}

}  // namespace

void write_sweep_errors_csv(const std::vector<SweepPoint>& points, const std::string& path) {
  std::ofstream f = open_csv(path);
  f << "parameter,realization,metric,value\n";
  std::string line;
  for (const auto& p : points) {
    for (const auto& m : metric_table(p)) {
      if (m.raw) {
        for (size_t r = 0; r < m.raw->size(); ++r) {
          line.clear();
          append_g17(line, p.parameter);
          line += ',' + std::to_string(r) + ',';
          line += m.name;
          line += ',';
          append_g17(line, (*m.raw)[r]);
          f << line << "\n";
        }
      } else {
        line.clear();
        append_g17(line, p.parameter);
        line += ",-1,";
        line += m.name;
        line += ',';
        append_g17(line, m.stat->mean);
        f << line << "\n";
      }
    }
  }
}

void write_sweep_summary_csv(const std::vector<SweepPoint>& points, const std::string& path) {
  std::ofstream f = open_csv(path);
  f << "parameter,metric,mean,std,count\n";
  std::string line;
  for (const auto& p : points)
    for (const auto& m : metric_table(p)) {
      line.clear();
      append_g17(line, p.parameter);
      line += ',';
      line += m.name;
      line += ',';
      append_g17(line, m.stat->mean);
      line += ',';
      append_g17(line, m.stat->stddev);
      line += ',' + std::to_string(m.stat->count);
      f << line << "\n";
    }
}

void write_sweep_confidence_csv(const std::vector<SweepPoint>& points,
                                const std::string& path) {
  std::ofstream f = open_csv(path);
  f << "parameter,metric,two_sigma_pop,two_sigma_mean\n";
  std::string line;
  for (const auto& p : points)
    for (const auto& m : metric_table(p)) {
      const double pop = 2.0 * m.stat->stddev;
      const double of_mean =
          m.stat->count > 0 ? pop / std::sqrt(static_cast<double>(m.stat->count)) : 0.0;
      line.clear();
      append_g17(line, p.parameter);
      line += ',';
      line += m.name;
      line += ',';
      append_g17(line, pop);
      line += ',';
      append_g17(line, of_mean);
      f << line << "\n";
    }
}

Stat TimingReport::stat(const std::string& method, int n) const {
  std::vector<double> vals;
  for (const auto& s : samples)
    if (s.method == method && s.n == n) vals.push_back(s.seconds);
  return sample_stat(vals);
}

double TimingReport::speedup(const std::string& fast, const std::string& slow, int n) const {
  const Stat f = stat(fast, n);
  const Stat s = stat(slow, n);
  if (f.count == 0 || s.count == 0 || f.mean <= 0.0)
    fail(ErrorCode::BadDimension, "missing timing rows for speedup");
  return s.mean / f.mean;
}

TimingReport benchmark(const BenchmarkSettings& settings) {
  if (settings.repeats < 5) fail(ErrorCode::ConfigError, "benchmark needs repeats >= 5");
  auto factory = settings.factory ? settings.factory : default_factory;

  TimingReport report;
  report.repeats = settings.repeats;
  for (int n : settings.n_list) {
    const ProblemBundle bundle = factory(n);
    HorizonPlan plan = settings.plan;
    plan.validate();

    // Direct solve uses the window cost structure extended to t_end with F = 0.
    LqProblem direct_prob = bundle.problem;
    direct_prob.F = SpMat(bundle.problem.n(), bundle.problem.n());
    const TimeGrid full_grid = plan.global_grid();

    MpcOptions opts;
    opts.ocp.tol = settings.tol;
    opts.ocp.max_iter = settings.max_iter;

    MpcOptions warm_opts = opts;
    warm_opts.warm_start = true;

    for (int r = 0; r < settings.repeats; ++r) {
      const auto timed = [&](const std::string& method, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.samples.push_back({method, n, r, secs});
      };
      timed("ocp", [&] {
        CnCache cache;
        ConstantSparseGenerator gen(direct_prob.A, kKeyProblemA);
        (void)solve_ocp(direct_prob, gen, direct_prob.x0, full_grid, cache, opts.ocp);
      });
      timed("mpc", [&] {
        CnCache cache;
        (void)run_mpc(bundle.problem, plan, opts, &cache);
      });
      timed("rbm-mpc", [&] {
        CnCache cache;
        (void)run_rbm_mpc(bundle.problem, bundle.splitting, plan, settings.seed,
                          static_cast<std::uint64_t>(r), opts, &cache);
      });
      if (settings.warm_variants) {
        timed("mpc-warm", [&] {
          CnCache cache;
          (void)run_mpc(bundle.problem, plan, warm_opts, &cache);
        });
        timed("rbm-mpc-warm", [&] {
          CnCache cache;
          (void)run_rbm_mpc(bundle.problem, bundle.splitting, plan, settings.seed,
                            static_cast<std::uint64_t>(r), warm_opts, &cache);
        });
      }
    }
  }
  return report;
}

void write_timings_csv(const TimingReport& report, const std::string& path) {
  std::ofstream f = open_csv(path);
  f << "method,n,repeat,seconds\n";
  std::string line;
  for (const auto& s : report.samples) {
    line = s.method + ',' + std::to_string(s.n) + ',' + std::to_string(s.repeat) + ',';
    append_g17(line, s.seconds);
    f << line << "\n";
  }
}

void write_timing_summary_csv(const TimingReport& report, const std::string& path) {
  std::ofstream f = open_csv(path);
  f << "method,n,mean,std,count\n";
  std::vector<std::pair<std::string, int>> seen;
  std::string line;
  for (const auto& s : report.samples) {
    const std::pair<std::string, int> key{s.method, s.n};
    bool dup = false;
    for (const auto& k : seen) dup = dup || k == key;
    if (dup) continue;
    seen.push_back(key);
    const Stat st = report.stat(s.method, s.n);
    line = s.method + ',' + std::to_string(s.n) + ',';
    append_g17(line, st.mean);
    line += ',';
    append_g17(line, st.stddev);
    line += ',' + std::to_string(st.count);
    f << line << "\n";
  }
}

}  // namespace rbmpc
