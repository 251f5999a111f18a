#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbmpc/harness.hpp"
#include "rbmpc/mpc.hpp"

namespace rbmpc {

inline constexpr const char* kVersion = "rbmpc 0.1.0";

// Flat key = value run configuration. One file per run; the CLI may override
// scalar fields with flags.
struct RunConfig {
  // problem source
  std::string problem = "heat-ring";  // heat-ring | files
  int n = 101;
  std::string x0_mode = "ones";  // ones | zero | e1 | sin
  std::string F_mode = "zero";   // zero | pinf
  std::string a_file, b_file, q_file, w_file, f_file, x0_file, splitting_file;

  // horizon plan
  HorizonPlan plan;

  // solver
  double tol = 1e-5;
  int max_iter = 1000;
  bool warm_start = false;

  // experiment
  std::string sweep_axis = "h";
  std::vector<double> sweep_values = {1.0, 0.5, 0.25, 0.125};
  int realizations = 20;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // optional explicit list
  std::vector<int> bench_n = {11, 101};
  int bench_repeats = 5;

  // output
  std::string out = "out";
  int jobs = 0;  // 0 = hardware concurrency
  bool csv_states = false;

  static RunConfig load(const std::string& path);
  void validate() const;
  std::string serialize() const;
};

// Builds the problem and splitting a config describes (heat ring or matrix
// files), applying the x0 and F modes. F_mode = pinf solves the ARE of the
// F = 0 problem and installs Pinf as the terminal weight.
ProblemBundle build_problem(const RunConfig& config);

// Dense whitespace-separated matrix file (one row per line).
Matrix load_dense_matrix(const std::string& path);

// manifest.txt: version + resolved config echo + seed list.
void write_manifest(const RunConfig& config, const std::string& dir,
                    const std::string& extra = {});

}  // namespace rbmpc
