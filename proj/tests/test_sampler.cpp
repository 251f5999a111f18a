#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rbmpc/integrator.hpp"
#include "rbmpc/sampler.hpp"

using namespace rbmpc;

TEST_SUITE("rbm-sampler") {

TEST_CASE("single subset with p=1 always picks it") {
  Matrix A(2, 2);
  A << -1.0, 0.5, 0.5, -1.0;
  const Splitting s = full_batch_splitting(A.sparseView());
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    RngStream rng(seed);
    const RbmSchedule sched = draw_schedule(s, 1.0, 15.0, 1.0, rng);
    CHECK(sched.K == 15);
    for (int pick : sched.picks) CHECK(pick == 0);
  }
}

TEST_CASE("grid mismatch errors") {
  Matrix A = Matrix::Identity(2, 2);
  const Splitting s = full_batch_splitting(A.sparseView());
  RngStream rng(1);
  CHECK_THROWS_AS(draw_schedule(s, 2.0, 15.0, 1.0, rng), Error);  // h does not divide T
  CHECK_THROWS_AS(draw_schedule(s, 0.5, 15.0, 1.0, rng), Error);  // dt does not divide h
}

TEST_CASE("empirical pick frequencies match the probabilities") {
  auto [prob, split] = heat_ring_example(11);
  (void)prob;
  RngStream rng(20240901);
  const int draws = 100000;
  std::vector<int> counts(11, 0);
  const int reps = draws / 10;  // schedules of length 10
  for (int r = 0; r < reps; ++r) {
    const RbmSchedule sched = draw_schedule(split, 1.0, 10.0, 1.0, rng);
    for (int pick : sched.picks) counts[static_cast<size_t>(pick)]++;
  }
  const double p = 1.0 / 11.0;
  const double bound = 3.0 * std::sqrt(p * (1.0 - p) / draws);
  for (int w = 0; w < 11; ++w) {
    const double freq = static_cast<double>(counts[static_cast<size_t>(w)]) / draws;
    CHECK(std::abs(freq - p) <= bound);
  }
}

TEST_CASE("determinism: same seed, same substream, same picks") {
  auto [prob, split] = heat_ring_example(11);
  (void)prob;
  const RngStream base(42);
  RngStream a = base.substream({3, 7});
  RngStream b = base.substream({3, 7});
  const RbmSchedule sa = draw_schedule(split, 1.0, 15.0, 1.0, a);
  const RbmSchedule sb = draw_schedule(split, 1.0, 15.0, 1.0, b);
  CHECK(sa.picks == sb.picks);
  RngStream c = base.substream({3, 8});
  const RbmSchedule sc = draw_schedule(split, 1.0, 15.0, 1.0, c);
  CHECK(sa.picks != sc.picks);
}

TEST_CASE("randomized generator: full batch returns A exactly") {
  auto [prob, split] = heat_ring_example(11);
  const Splitting full = full_batch_splitting(prob.A);
  RngStream rng(5);
  const RbmSchedule sched = draw_schedule(full, 1.0, 15.0, 1.0, rng);
  const SpMat G = randomized_generator(full, sched, 7.3);
  CHECK((Matrix(G) - Matrix(prob.A)).cwiseAbs().maxCoeff() == 0.0);
  (void)split;
}

TEST_CASE("randomized generator: omitting the corner leaves an open chain") {
  const int n = 11;
  auto [prob, split] = heat_ring_example(n);
  (void)prob;
  // Subset n-1 omits the corner-coupling part (the last one).
  const Matrix G = Matrix(split.assemble(n - 1));
  const Matrix chain = G * (static_cast<double>(n - 1) / n);  // undo 1/pi scaling
  // Tridiagonal: nothing beyond the first off-diagonals, corners decoupled.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(i - j) > 1) CHECK(chain(i, j) == 0.0);
  CHECK(chain(0, 0) == doctest::Approx(-100.0));   // boundary rows lose one neighbor
  CHECK(chain(n - 1, n - 1) == doctest::Approx(-100.0));
  CHECK(chain(5, 5) == doctest::Approx(-200.0));
}

TEST_CASE("probability-weighted average of the generator equals A") {
  auto [prob, split] = heat_ring_example(11);
  RbmSchedule sched;
  sched.h = 1.0;
  sched.K = 1;
  Matrix avg = Matrix::Zero(11, 11);
  for (int w = 0; w < split.subset_count(); ++w) {
    sched.picks = {w};
    avg += split.subsets[static_cast<size_t>(w)].probability *
           Matrix(randomized_generator(split, sched, 0.0));
  }
  CHECK((avg - Matrix(prob.A)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("out-of-horizon access throws") {
  auto [prob, split] = heat_ring_example(11);
  (void)prob;
  RngStream rng(1);
  const RbmSchedule sched = draw_schedule(split, 1.0, 15.0, 1.0, rng);
  CHECK_THROWS_AS(randomized_generator(split, sched, 15.0), Error);
  CHECK_NOTHROW(randomized_generator(split, sched, 14.999999));
}

TEST_CASE("realization log round trip") {
  RealizationLog log;
  RbmSchedule s1;
  s1.h = 1.0;
  s1.K = 4;
  s1.picks = {0, 3, 2, 1};
  RbmSchedule s2 = s1;
  s2.picks = {5, 5, 0, 7};
  log.schedules = {s1, s2};
  const std::string path =
      (std::filesystem::temp_directory_path() / "rbmpc_log_test.txt").string();
  log.save(path);
  const RealizationLog loaded = RealizationLog::load(path);
  REQUIRE(loaded.schedules.size() == 2);
  CHECK(loaded.schedules[0].picks == s1.picks);
  CHECK(loaded.schedules[1].picks == s2.picks);
  std::filesystem::remove(path);
}

// The random evolution operator stays close to e^{At} in mean square, and the
// deviation scales linearly in h once the per-window bias term (O(h^2)) is
// subdominant. Measured on the unit-diffusivity ring over a short horizon:
// under the grid-scaled diffusivity both operators collapse to the rank-one
// constant-mode projector within ~1e-26 and the slope is floating-point
// noise (that regime is reported, not asserted, by the acceptance suite).
TEST_CASE("semigroup proximity: E|S_R - e^{AT}|^2 scales like h at n=11") {
  const int n = 11;
  auto [prob, split] = heat_ring_example(n, 1.0);
  const double T = 2.0;
  const int schedules = 400;

  const auto expm_sym = [](const SpMat& G, double t) {
    const Matrix Gd = Matrix(G);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Gd);
    return Matrix(es.eigenvectors() *
                  (es.eigenvalues().array() * t).exp().matrix().asDiagonal() *
                  es.eigenvectors().transpose());
  };

  std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  std::vector<double> log_h, log_mean;
  RngStream rng(123);
  for (double h : hs) {
    const int K = static_cast<int>(std::lround(T / h));
    std::vector<Matrix> piece(static_cast<size_t>(split.subset_count()));
    for (int w = 0; w < split.subset_count(); ++w)
      piece[static_cast<size_t>(w)] = expm_sym(split.assemble(w), h);
    const Matrix SA = expm_sym(prob.A, T);

    double acc = 0.0;
    for (int s = 0; s < schedules; ++s) {
      const RbmSchedule sched = draw_schedule(split, h, T, h, rng);
      Matrix SR = Matrix::Identity(n, n);
      for (int k = 0; k < K; ++k) SR = piece[static_cast<size_t>(sched.picks[k])] * SR;
      const double dev = spectral_norm(Matrix(SR - SA));
      acc += dev * dev;
    }
    log_h.push_back(std::log(h));
    log_mean.push_back(std::log(acc / schedules));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int k = static_cast<int>(hs.size());
  for (int i = 0; i < k; ++i) {
    sx += log_h[i];
    sy += log_mean[i];
    sxx += log_h[i] * log_h[i];
    sxy += log_h[i] * log_mean[i];
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  MESSAGE("semigroup proximity slope: ", slope);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.25));
}

}  // TEST_SUITE
