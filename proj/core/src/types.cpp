#include "rbmpc/types.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace rbmpc {

int exact_ratio(double a, double b, const std::string& what, double tol) {
  if (b == 0.0) fail(ErrorCode::GridMismatch, what + ": zero divisor");
  const double r = a / b;
  const double k = std::round(r);
  if (std::abs(a - k * b) > tol * std::max(1.0, std::abs(a)) || k < 0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s: %.17g is not an integer multiple of %.17g",
                  what.c_str(), a, b);
    fail(ErrorCode::GridMismatch, buf);
  }
  return static_cast<int>(k);
}

void Trajectory::validate() const {
  if (states.cols() != grid.nodes() || controls.cols() != grid.nodes())
    fail(ErrorCode::BadDimension, "trajectory arrays do not match grid");
  if (!states.allFinite() || !controls.allFinite())
    fail(ErrorCode::BadDimension, "trajectory contains non-finite entries");
}

Trajectory make_trajectory(const TimeGrid& grid, int n, int m) {
  Trajectory traj;
  traj.grid = grid;
  traj.states = Matrix::Zero(n, grid.nodes());
  traj.controls = Matrix::Zero(m, grid.nodes());
  return traj;
}

namespace {

void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          bool include_states) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  const int n = traj.n();
  const int m = traj.m();

  std::string line = "t";
  if (include_states)
    for (int i = 0; i < n; ++i) line += ",x_" + std::to_string(i + 1);
  line += ",norm_x";
  for (int j = 0; j < m; ++j) line += ",u_" + std::to_string(j + 1);
  f << line << "\n";

  for (int k = 0; k < traj.grid.nodes(); ++k) {
    line.clear();
    append_g17(line, traj.grid.node(k));
    if (include_states)
      for (int i = 0; i < n; ++i) {
        line += ',';
        append_g17(line, traj.states(i, k));
      }
    line += ',';
    append_g17(line, traj.states.col(k).norm());
    for (int j = 0; j < m; ++j) {
      line += ',';
      append_g17(line, traj.controls(j, k));
    }
    f << line << "\n";
  }
  if (!f) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace rbmpc
