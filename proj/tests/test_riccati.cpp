#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "rbmpc/riccati.hpp"
#include "rbmpc/rng.hpp"
#include "rbmpc/sampler.hpp"

using namespace rbmpc;

namespace {

LqProblem scalar_problem(double a, double b, double q, double w, double f) {
  LqProblem prob;
  SpMat A(1, 1);
  if (a != 0.0) A.insert(0, 0) = a;
  prob.A = A;
  prob.B = Matrix::Constant(1, 1, b);
  SpMat Q(1, 1);
  Q.insert(0, 0) = q;
  prob.Q = Q;
  prob.W = Matrix::Constant(1, 1, w);
  SpMat F(1, 1);
  if (f != 0.0) F.insert(0, 0) = f;
  prob.F = F;
  prob.x0 = Vector::Ones(1);
  return prob;
}

}  // namespace

TEST_SUITE("riccati") {

TEST_CASE("scalar RDE closed form: P(0) = tanh(T)") {
  // a = 0, b = 1, q = 1, w = 1, F = 0, T = 5.
  const LqProblem prob = scalar_problem(0.0, 1.0, 1.0, 1.0, 0.0);
  ConstantSparseGenerator gen(prob.A, kKeyProblemA);
  const TimeGrid grid{0.0, 0.1, 50};
  const RiccatiPath path = solve_rde(prob, gen, grid);
  CHECK(path.at(50)(0, 0) == 0.0);
  CHECK(path.at(0)(0, 0) == doctest::Approx(std::tanh(5.0)).epsilon(1e-6));
  // Interior nodes follow tanh(T - t).
  CHECK(path.at(30)(0, 0) == doctest::Approx(std::tanh(2.0)).epsilon(1e-6));
}

TEST_CASE("scalar ARE closed forms") {
  {
    const LqProblem prob = scalar_problem(0.0, 1.0, 1.0, 1.0, 0.0);
    const StabilizedLoop loop = solve_are(prob);
    CHECK(loop.Pinf(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(loop.Ainf(0, 0) == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(loop.mu_inf == doctest::Approx(1.0).epsilon(1e-9));
  }
  {
    // a = 1, b = 1, q = 1, w = 1: P = 1 + sqrt(2), Ainf = -sqrt(2).
    const LqProblem prob = scalar_problem(1.0, 1.0, 1.0, 1.0, 0.0);
    const StabilizedLoop loop = solve_are(prob);
    CHECK(loop.Pinf(0, 0) == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-10));
    CHECK(loop.Ainf(0, 0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-10));
  }
}

TEST_CASE("ARE on the heat ring: Hurwitz loop despite the zero eigenvalue") {
  for (int n : {11, 101}) {
    auto [prob, split] = heat_ring_example(n);
    (void)split;
    const StabilizedLoop loop = solve_are(prob);
    CHECK(loop.residual <= 1e-8 * spectral_norm(Matrix(prob.Q)));
    Eigen::EigenSolver<Matrix> es(loop.Ainf);
    CHECK(es.eigenvalues().real().maxCoeff() < 0.0);
    CHECK(loop.mu_inf > 0.0);
    CHECK(loop.M_inf >= 1.0);
    // Open loop is not Hurwitz: the constant mode sits at zero.
    Eigen::SelfAdjointEigenSolver<Matrix> open(Matrix(prob.A));
    CHECK(std::abs(open.eigenvalues().maxCoeff()) < 1e-8);
  }
}

TEST_CASE("ARE cross-check: sign-function solution matches the RDE limit") {
  {
    const LqProblem prob = scalar_problem(0.0, 1.0, 1.0, 1.0, 0.0);
    const Matrix P = solve_are_rde_limit(prob, 0.25, 400);
    CHECK(P(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
  }
  {
    auto [prob, split] = heat_ring_example(11, 1.0);  // unit ring keeps RK4 cheap
    (void)split;
    const StabilizedLoop loop = solve_are(prob);
    const Matrix P = solve_are_rde_limit(prob, 0.5, 2000);
    CHECK(spectral_norm(Matrix(P - loop.Pinf)) <= 1e-6 * spectral_norm(loop.Pinf));
  }
}

TEST_CASE("RDE fixed point: terminal Pinf stays at Pinf") {
  auto [prob, split] = heat_ring_example(11);
  (void)split;
  const StabilizedLoop loop = solve_are(prob);
  ConstantSparseGenerator gen(prob.A, kKeyProblemA);
  const TimeGrid grid{0.0, 1.0, 15};
  const RiccatiPath path = solve_rde(prob, gen, grid, loop.Pinf);
  double worst = 0.0;
  for (const Matrix& P : path.P) worst = std::max(worst, spectral_norm(Matrix(P - loop.Pinf)));
  CHECK(worst <= 1e-8 * spectral_norm(loop.Pinf));
}

TEST_CASE("RRDE with the full-batch schedule equals the RDE bitwise") {
  auto [prob, split] = heat_ring_example(11);
  (void)split;
  const Splitting full = full_batch_splitting(prob.A);
  RngStream rng(3);
  const RbmSchedule sched = draw_schedule(full, 1.0, 15.0, 1.0, rng);
  RbmWindowGenerator rgen(full, sched, 1.0);
  ConstantSparseGenerator agen(prob.A, kKeyProblemA);
  const TimeGrid grid{0.0, 1.0, 15};
  const RiccatiPath rrde = solve_rde(prob, rgen, grid);
  const RiccatiPath rde = solve_rde(prob, agen, grid);
  for (int k = 0; k <= 15; ++k)
    CHECK((rrde.at(k) - rde.at(k)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Riccati paths are symmetric PSD") {
  auto [prob, split] = heat_ring_example(11);
  RngStream rng(11);
  const RbmSchedule sched = draw_schedule(split, 1.0, 15.0, 1.0, rng);
  RbmWindowGenerator rgen(split, sched, 1.0);
  const TimeGrid grid{0.0, 1.0, 15};
  const RiccatiPath path = solve_rde(prob, rgen, grid);
  for (const Matrix& P : path.P) {
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + P.norm()));
    Eigen::SelfAdjointEigenSolver<Matrix> es(P, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9 * (1.0 + P.norm()));
  }
}

TEST_CASE("Lyapunov solver residual") {
  RngStream rng(5);
  const int n = 8;
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.next_unit() - 0.5;
  A -= 2.0 * Matrix::Identity(n, n);
  Matrix C0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) C0(i, j) = rng.next_unit() - 0.5;
  const Matrix C = C0.transpose() * C0;
  const Matrix X = solve_lyapunov(A, C);
  CHECK((A.transpose() * X + X * A + C).norm() <= 1e-11 * (1.0 + X.norm()));
}

TEST_CASE("feedback law") {
  const LqProblem prob = scalar_problem(0.0, 1.0, 1.0, 1.0, 0.0);
  const Matrix P = Matrix::Identity(1, 1);
  CHECK(feedback_control(P, prob, Vector::Zero(1))(0) == 0.0);
  CHECK(feedback_control(P, prob, Vector::Constant(1, 2.0))(0) == doctest::Approx(-2.0));
}

TEST_CASE("finite-escape guard trips on an antistabilizable scalar") {
  // P' = 2aP + q with b = 0 grows without bound for a > 0; the guard must
  // fire rather than return garbage.
  LqProblem prob = scalar_problem(40.0, 0.0, 1.0, 1.0, 0.0);
  ConstantSparseGenerator gen(prob.A, kKeyProblemA);
  const TimeGrid grid{0.0, 1.0, 2000};
  CHECK_THROWS_AS(solve_rde(prob, gen, grid), Error);
}

// Convergence of the finite-horizon value toward the infinite-horizon one:
// |P_T(0) - Pinf| ~ C e^{-2 mu_inf T}.
TEST_CASE("finite-horizon Riccati decay rate matches 2 mu_inf") {
  auto [prob, split] = heat_ring_example(11);
  (void)split;
  const StabilizedLoop loop = solve_are(prob);
  ConstantSparseGenerator gen(prob.A, kKeyProblemA);

  std::vector<double> Ts{5.0, 10.0, 15.0, 20.0, 25.0};
  std::vector<double> gaps;
  for (double T : Ts) {
    const TimeGrid grid{0.0, 1.0, static_cast<int>(T)};
    const RiccatiPath path = solve_rde(prob, gen, grid);
    gaps.push_back(spectral_norm(Matrix(path.at(0) - loop.Pinf)));
  }
  // Least-squares exponential rate.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int k = static_cast<int>(Ts.size());
  for (int i = 0; i < k; ++i) {
    sx += Ts[i];
    sy += std::log(gaps[i]);
    sxx += Ts[i] * Ts[i];
    sxy += Ts[i] * std::log(gaps[i]);
  }
  const double rate = -(k * sxy - sx * sy) / (k * sxx - sx * sx);
  MESSAGE("Riccati gap decay rate ", rate, " vs 2 mu_inf ", 2.0 * loop.mu_inf);
  CHECK(std::abs(rate - 2.0 * loop.mu_inf) <= 0.3 * 2.0 * loop.mu_inf);

  // Transient bound: max_t |P_T(t)| <= |Pinf| + C_fit |F - Pinf|, with C_fit
  // the fitted prefactor of the decay law gap(T) = C_fit |F - Pinf| e^{-rate T}.
  const double slope_fit = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  const double intercept = sy / k - slope_fit * sx / k;
  const double f_gap = spectral_norm(loop.Pinf);  // F = 0 here
  const double c_fit = std::exp(intercept) / f_gap;
  const TimeGrid grid{0.0, 1.0, 15};
  const RiccatiPath path = solve_rde(prob, gen, grid);
  double max_norm = 0.0;
  for (const Matrix& P : path.P) max_norm = std::max(max_norm, spectral_norm(P));
  CHECK(max_norm <= spectral_norm(loop.Pinf) + std::max(1.0, c_fit) * f_gap + 1e-9);
}

// Mean distance between the randomized and deterministic Riccati solutions
// scales like sqrt(h).
TEST_CASE("RRDE-vs-RDE proximity scales like sqrt(h)" * doctest::timeout(600)) {
  auto [prob, split] = heat_ring_example(11);
  const double T = 15.0;
  ConstantSparseGenerator agen(prob.A, kKeyProblemA);
  RngStream rng(31);

  std::vector<double> hs{1.0, 0.5, 0.25};
  std::vector<double> log_h, log_mean;
  for (double h : hs) {
    const double dt = h;
    const TimeGrid grid{0.0, dt, static_cast<int>(std::lround(T / dt))};
    const RiccatiPath rde = solve_rde(prob, agen, grid);
    double acc = 0.0;
    const int schedules = 100;
    for (int s = 0; s < schedules; ++s) {
      const RbmSchedule sched = draw_schedule(split, h, T, dt, rng);
      RbmWindowGenerator rgen(split, sched, dt);
      const RiccatiPath rrde = solve_rde(prob, rgen, grid);
      acc += spectral_norm(Matrix(rrde.at(0) - rde.at(0)));
    }
    log_h.push_back(std::log(h));
    log_mean.push_back(std::log(acc / schedules));
  }
  const double slope =
      (log_mean[0] - log_mean[2]) / (log_h[0] - log_h[2]);
  MESSAGE("RRDE proximity slope ", slope);
  CHECK(slope == doctest::Approx(0.5).epsilon(0.4));  // 0.5 +- 0.2
}

}  // TEST_SUITE
