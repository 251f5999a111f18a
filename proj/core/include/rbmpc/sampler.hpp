#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbmpc/rng.hpp"
#include "rbmpc/system_model.hpp"
#include "rbmpc/types.hpp"

namespace rbmpc {

// One RBM realization over a horizon of length T = K*h: the subset picked
// for each subinterval [(k-1)h, kh).
struct RbmSchedule {
  double h = 0.0;
  int K = 0;
  std::vector<int> picks;  // 0-based indices into the splitting's subset list
  std::uint64_t seed = 0;

  double horizon() const { return h * static_cast<double>(K); }
  int pick_at(double t) const;  // throws OutOfHorizon for t >= K*h
};

// Omega_i: the per-window schedules accumulated over an MPC run.
struct RealizationLog {
  std::vector<RbmSchedule> schedules;

  // Line-based text format, one schedule per line of integer picks.
  void save(const std::string& path) const;
  static RealizationLog load(const std::string& path);
};

// K = T/h i.i.d. categorical draws over the listed subsets. dt is the
// integrator step; switching times must land on integrator nodes.
RbmSchedule draw_schedule(const Splitting& splitting, double h, double T, double dt,
                          RngStream& rng);

// A_R(omega, t) = sum_{m in S_pick(t)} A_m / pi_m, constant per subinterval.
SpMat randomized_generator(const Splitting& splitting, const RbmSchedule& schedule,
                           double t);

}  // namespace rbmpc
