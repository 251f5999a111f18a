#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>

#include "rbmpc/errors.hpp"

namespace rbmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// Uniform time grid t_k = t0 + k*dt, k = 0..steps. Node times come from the
// accumulation-free formula so grids built from the same (t0, dt, steps)
// are bit-identical.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  int steps = 0;

  int nodes() const { return steps + 1; }
  double node(int k) const { return t0 + static_cast<double>(k) * dt; }
  double span() const { return static_cast<double>(steps) * dt; }
  double t_end() const { return node(steps); }

  bool same_layout(const TimeGrid& other) const {
    return steps == other.steps && dt == other.dt && t0 == other.t0;
  }
};

// Exact integer ratio a/b; throws GridMismatch when a is not an integer
// multiple of b within tol.
int exact_ratio(double a, double b, const std::string& what, double tol = 1e-12);

// Node-sampled state and control histories on a common grid.
// states is n x (steps+1), controls is m x (steps+1).
struct Trajectory {
  TimeGrid grid;
  Matrix states;
  Matrix controls;

  int n() const { return static_cast<int>(states.rows()); }
  int m() const { return static_cast<int>(controls.rows()); }

  Vector state(int k) const { return states.col(k); }
  Vector control(int k) const { return controls.col(k); }

  void validate() const;
};

Trajectory make_trajectory(const TimeGrid& grid, int n, int m);

// CSV export: columns t, x_1..x_n (optional), |x|, u_1..u_m.
void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          bool include_states = false);

}  // namespace rbmpc
