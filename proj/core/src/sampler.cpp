#include "rbmpc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rbmpc {

int RbmSchedule::pick_at(double t) const {
  if (t < 0.0) fail(ErrorCode::OutOfHorizon, "negative time");
  int k = static_cast<int>(std::floor(t / h + 1e-12));
  if (k >= K) {
    // Tolerate roundoff exactly at the horizon only when it rounds down.
    if (t < horizon() * (1.0 + 1e-12) && k == K && t < horizon()) k = K - 1;
    else fail(ErrorCode::OutOfHorizon, "time beyond the schedule horizon");
  }
  return picks[static_cast<size_t>(k)];
}

void RealizationLog::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  for (const auto& s : schedules) {
    for (int k = 0; k < s.K; ++k) {
      if (k) f << ' ';
      f << s.picks[static_cast<size_t>(k)];
    }
    f << '\n';
  }
  if (!f) fail(ErrorCode::IoError, "write failed for " + path);
}

RealizationLog RealizationLog::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  RealizationLog log;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    RbmSchedule s;
    std::istringstream iss(line);
    int pick;
    while (iss >> pick) s.picks.push_back(pick);
    if (s.picks.empty()) continue;
    s.K = static_cast<int>(s.picks.size());
    log.schedules.push_back(std::move(s));
  }
  return log;
}

RbmSchedule draw_schedule(const Splitting& splitting, double h, double T, double dt,
                          RngStream& rng) {
  if (h <= 0.0 || T <= 0.0) fail(ErrorCode::GridMismatch, "h and T must be positive");
  const int K = exact_ratio(T, h, "RBM horizon T over h");
  (void)exact_ratio(h, dt, "RBM spacing h over the integrator step");

  RbmSchedule schedule;
  schedule.h = h;
  schedule.K = K;
  schedule.picks.resize(static_cast<size_t>(K));
  const auto& cum = splitting.cumulative();
  for (int k = 0; k < K; ++k) {
    const double u = rng.next_unit();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const int idx = static_cast<int>(std::min<std::ptrdiff_t>(
        it - cum.begin(), static_cast<std::ptrdiff_t>(cum.size()) - 1));
    schedule.picks[static_cast<size_t>(k)] = idx;
  }
  return schedule;
}

SpMat randomized_generator(const Splitting& splitting, const RbmSchedule& schedule,
                           double t) {
  const int pick = schedule.pick_at(t);
  if (pick < 0 || pick >= splitting.subset_count())
    fail(ErrorCode::BadDimension, "schedule pick outside the listed subsets");
  return splitting.assemble(pick);
}

}  // namespace rbmpc
