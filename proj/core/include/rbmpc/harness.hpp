#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rbmpc/mpc.hpp"
#include "rbmpc/types.hpp"

namespace rbmpc {

enum class NormKind { L2Time, LinfScaled };

// L2 norm over time via the trapezoidal rule.
double l2_time_norm(const Matrix& signal, const TimeGrid& grid);
// max_t sqrt(x(t)' x(t) / n).
double linf_scaled_norm(const Matrix& states, const TimeGrid& grid);
// |a - ref| / |ref| in the given norm; normalization by the reference signal.
double relative_error(const Matrix& a, const Matrix& ref, const TimeGrid& grid,
                      NormKind kind);

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  // unbiased sample estimator; 0 when count == 1
  int count = 0;
};
Stat sample_stat(const std::vector<double>& values);

struct ErrorReport {
  Stat rel_u_rm_vs_inf, rel_u_rm_vs_m, rel_u_m_vs_inf;
  Stat rel_x_rm_vs_inf, rel_x_rm_vs_m, rel_x_m_vs_inf;
};

struct FitPoint {
  double x = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

struct FitResult {
  double value = 0.0;       // slope (log-log) or decay rate (exponential)
  double confidence = 0.0;  // half-width of the 2-sigma interval of the fit
  std::vector<FitPoint> points;
};

// Least-squares slope of log(mean) against log(x); needs >= 3 points.
FitResult fit_loglog_slope(const std::vector<FitPoint>& points);
// Least-squares rate of mean ~ C exp(-rate x); needs >= 3 points.
FitResult fit_exp_rate(const std::vector<FitPoint>& points);

struct ProblemBundle {
  LqProblem problem;
  Splitting splitting;
};

enum class SweepAxis { H, T, Tau, N };
SweepAxis sweep_axis_from_string(const std::string& name);
const char* sweep_axis_name(SweepAxis axis);

struct SweepSettings {
  SweepAxis axis = SweepAxis::H;
  std::vector<double> values;
  HorizonPlan base_plan;
  int n = 101;
  std::function<ProblemBundle(int)> factory;  // defaults to heat_ring_example
  double tol = 1e-5;
  int max_iter = 1000;
  bool warm_start = false;
  int realizations = 20;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> explicit_seeds;  // overrides (seed, r) substreams
  int jobs = 1;
};

struct SweepPoint {
  double parameter = 0.0;
  ErrorReport report;
  // Raw per-realization values of the stochastic metrics, indexed by seed.
  std::vector<double> u_rm_inf, u_rm_m, x_rm_inf, x_rm_m;
};

// One baseline pair (LQR + MPC) per parameter value, plus `realizations`
// RBM-MPC runs with per-realization RNG substreams. Realizations fan out to a
// worker pool and are reduced in index order. Varying h refines dt with it
// (h = dt), matching the experiment protocol.
std::vector<SweepPoint> sweep(const SweepSettings& settings);

// CSV schemas (floats printed with 17 significant digits):
//   errors:  parameter,realization,metric,value   (realization -1 = deterministic)
//   summary: parameter,metric,mean,std,count
//   confidence: parameter,metric,two_sigma_pop,two_sigma_mean
void write_sweep_errors_csv(const std::vector<SweepPoint>& points, const std::string& path);
void write_sweep_summary_csv(const std::vector<SweepPoint>& points, const std::string& path);
void write_sweep_confidence_csv(const std::vector<SweepPoint>& points, const std::string& path);

struct TimingSample {
  std::string method;
  int n = 0;
  int repeat = 0;
  double seconds = 0.0;
};

struct TimingReport {
  std::vector<TimingSample> samples;
  int repeats = 0;
  Stat stat(const std::string& method, int n) const;
  // mean(method_b) / mean(method_a): how many times faster a is than b.
  double speedup(const std::string& fast, const std::string& slow, int n) const;
};

struct BenchmarkSettings {
  std::vector<int> n_list = {11, 101};
  int repeats = 5;  // minimum 5
  HorizonPlan plan;
  double tol = 1e-5;
  int max_iter = 1000;
  std::uint64_t seed = 1;
  bool warm_variants = true;
  std::function<ProblemBundle(int)> factory;
};

// Wall times for the direct OCP on [0, t_end] (F = 0), MPC and RBM-MPC, each
// with a fresh factorization cache per timed run. Problem construction and
// CSV output are excluded from the timings; solver iterations and
// factorizations are included.
TimingReport benchmark(const BenchmarkSettings& settings);

// timings CSV: method,n,repeat,seconds
void write_timings_csv(const TimingReport& report, const std::string& path);
void write_timing_summary_csv(const TimingReport& report, const std::string& path);

}  // namespace rbmpc
