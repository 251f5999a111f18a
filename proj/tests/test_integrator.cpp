#include <doctest.h>

#include <cmath>

#include "rbmpc/integrator.hpp"
#include "rbmpc/rng.hpp"
#include "rbmpc/sampler.hpp"

using namespace rbmpc;

namespace {

SpMat scalar_gen(double a) {
  SpMat G(1, 1);
  if (a != 0.0) G.insert(0, 0) = a;
  return G;
}

LqProblem random_problem(int n, int m, std::uint64_t seed, bool stable = true) {
  RngStream rng(seed);
  Matrix A(n, n), B(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.next_unit() - 0.5;
  if (stable) A -= Matrix::Identity(n, n) * 1.5;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) B(i, j) = rng.next_unit() - 0.5;
  Matrix Qh(n, n), Wh(m, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Qh(i, j) = rng.next_unit() - 0.5;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) Wh(i, j) = rng.next_unit() - 0.5;
  LqProblem prob;
  prob.A = A.sparseView();
  prob.B = B;
  prob.Q = Matrix(Qh.transpose() * Qh).sparseView();
  prob.W = Wh.transpose() * Wh + Matrix::Identity(m, m);
  Matrix Fh = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) Fh(i, i) = 0.25 * (i + 1) / n;
  prob.F = Fh.sparseView();
  prob.x0 = Vector::Zero(n);
  for (int i = 0; i < n; ++i) prob.x0[i] = rng.next_unit() - 0.5;
  return prob;
}

double discrete_cost(const LqProblem& prob, const StepGenerator& gen, const Matrix& u,
                     const Vector& x0, const TimeGrid& grid, CnCache& cache) {
  const Trajectory x = propagate(gen, prob.B, u, x0, grid, cache);
  return trapz_quadratic(x, prob.Q, prob.W, prob.F);
}

}  // namespace

TEST_SUITE("integrator") {

TEST_CASE("scalar CN step multiplier") {
  // a = -1, dt = 1: multiplier (1 + a dt/2)/(1 - a dt/2) = 1/3.
  CnCache cache;
  ConstantSparseGenerator gen(scalar_gen(-1.0), 100);
  const TimeGrid grid{0.0, 1.0, 1};
  const Matrix u = Matrix::Zero(1, 2);
  Trajectory traj = propagate(gen, Matrix::Zero(1, 1), u, Vector::Ones(1), grid, cache);
  CHECK(traj.states(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("zero generator leaves only the control term") {
  CnCache cache;
  ConstantSparseGenerator gen(scalar_gen(0.0), 101);
  const TimeGrid grid{0.0, 1.0, 1};
  Matrix u(1, 2);
  u << 1.0, 1.0;
  Matrix B = Matrix::Ones(1, 1);
  Trajectory traj = propagate(gen, B, u, Vector::Zero(1), grid, cache);
  // x1 = x0 + dt/2 (u0 + u1) = 1.
  CHECK(traj.states(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("one CN step with forcing: a=-1, b=1, u=1, x0=0 gives 2/3") {
  CnCache cache;
  ConstantSparseGenerator gen(scalar_gen(-1.0), 102);
  const TimeGrid grid{0.0, 1.0, 1};
  Matrix u = Matrix::Ones(1, 2);
  Trajectory traj = propagate(gen, Matrix::Ones(1, 1), u, Vector::Zero(1), grid, cache);
  CHECK(traj.states(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("CN propagator matches the circulant eigenvalue map on the ring") {
  const int n = 11;
  auto [prob, split] = heat_ring_example(n);
  (void)split;
  const double dt = 1.0;
  const Matrix M = cn_propagator(prob.A, dt);

  // Oracle: Fourier modes diagonalize the circulant; lambda_j = -4(n-1)^2 sin^2(pi j / n).
  Eigen::MatrixXcd Mhat = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double lam = -4.0 * 100.0 * std::pow(std::sin(M_PI * j / n), 2);
    const std::complex<double> r((1.0 + 0.5 * dt * lam) / (1.0 - 0.5 * dt * lam), 0.0);
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i)
      v[i] = std::exp(std::complex<double>(0.0, 2.0 * M_PI * i * j / n)) / std::sqrt(double(n));
    Mhat += r * v * v.adjoint();
  }
  CHECK((M - Mhat.real()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("factorization paths: ring is sparse, cut pieces are banded") {
  auto [prob, split] = heat_ring_example(11);
  CnFactorization full(prob.A, 1.0);
  CHECK(full.path() == CnFactorization::Path::Sparse);
  for (int w : {0, 5, 10}) {
    CnFactorization piece(split.assemble(w), 1.0);
    CHECK(piece.path() == CnFactorization::Path::Banded);
  }
}

TEST_CASE("banded and sparse paths agree on solves and transposes") {
  auto [prob, split] = heat_ring_example(21);
  (void)prob;
  const SpMat piece = split.assemble(7);
  CnFactorization banded(piece, 0.5);
  REQUIRE(banded.path() == CnFactorization::Path::Banded);
  // Dense reference.
  const int n = 21;
  Matrix L = Matrix::Identity(n, n) - 0.25 * Matrix(piece);
  Matrix R = Matrix::Identity(n, n) + 0.25 * Matrix(piece);
  RngStream rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Vector b(n);
    for (int i = 0; i < n; ++i) b[i] = rng.next_unit() - 0.5;
    CHECK((L * banded.solve(b) - b).norm() < 1e-10 * b.norm());
    CHECK((L.transpose() * banded.solve_transpose(b) - b).norm() < 1e-10 * b.norm());
    CHECK((banded.apply_plus(b) - R * b).norm() < 1e-12 * b.norm());
    CHECK((banded.apply_plus_transpose(b) - R.transpose() * b).norm() < 1e-12 * b.norm());
  }
}

TEST_CASE("zero control on the stable ring: |x| nonincreasing") {
  auto [prob, split] = heat_ring_example(11);
  (void)split;
  CnCache cache;
  ConstantSparseGenerator gen(prob.A, kKeyProblemA);
  const TimeGrid grid{0.0, 1.0, 30};
  const Matrix u = Matrix::Zero(1, grid.nodes());
  Vector x0(11);
  RngStream rng(9);
  for (int i = 0; i < 11; ++i) x0[i] = rng.next_unit() - 0.5;
  Trajectory traj = propagate(gen, prob.B, u, x0, grid, cache);
  for (int k = 0; k < 30; ++k)
    CHECK(traj.states.col(k + 1).norm() <= traj.states.col(k).norm() * (1.0 + 1e-12));
}

TEST_CASE("full-batch RBM generator propagates bitwise like A") {
  auto [prob, split] = heat_ring_example(11);
  (void)split;
  const Splitting full = full_batch_splitting(prob.A);
  RngStream rng(4);
  const RbmSchedule sched = draw_schedule(full, 1.0, 15.0, 1.0, rng);
  RbmWindowGenerator rbm_gen(full, sched, 1.0);
  ConstantSparseGenerator a_gen(prob.A, kKeyProblemA);
  const TimeGrid grid{0.0, 1.0, 15};
  Matrix u(1, grid.nodes());
  for (int k = 0; k < grid.nodes(); ++k) u(0, k) = std::sin(0.3 * k);
  CnCache c1, c2;
  Trajectory ta = propagate(a_gen, prob.B, u, prob.x0, grid, c1);
  Trajectory tr = propagate(rbm_gen, prob.B, u, prob.x0, grid, c2);
  CHECK((ta.states - tr.states).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("CN is time-reversible on homogeneous linear systems") {
  auto [prob, split] = heat_ring_example(11);
  (void)split;
  CnCache cache;
  ConstantSparseGenerator fwd(prob.A, kKeyProblemA);
  ConstantSparseGenerator bwd(SpMat(prob.A * -1.0), 777);
  const TimeGrid grid{0.0, 0.001, 20};
  const Matrix u = Matrix::Zero(1, grid.nodes());
  Vector x0(11);
  RngStream rng(5);
  for (int i = 0; i < 11; ++i) x0[i] = rng.next_unit() - 0.5;
  Trajectory forward = propagate(fwd, prob.B, u, x0, grid, cache);
  Trajectory backward = propagate(bwd, prob.B, u, forward.states.col(20), grid, cache);
  CHECK((backward.states.col(20) - x0).norm() < 1e-10 * x0.norm());
}

TEST_CASE("adjoint ODE solve: zero weights give zero adjoint") {
  auto [prob, split] = heat_ring_example(11);
  (void)split;
  CnCache cache;
  ConstantSparseGenerator gen(prob.A, kKeyProblemA);
  const TimeGrid grid{0.0, 1.0, 10};
  const Matrix u = Matrix::Zero(1, grid.nodes());
  Trajectory x = propagate(gen, prob.B, u, prob.x0, grid, cache);
  const SpMat zero(11, 11);
  Trajectory p = propagate_adjoint(gen, zero, zero, x, cache);
  CHECK(p.states.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adjoint ODE solve: trapezoidal accumulation of Qx, scalar") {
  // a = 0, Q = 1, F = 0, x == 1 on [0,1], dt = 1: p(0) = 1.
  CnCache cache;
  ConstantSparseGenerator gen(scalar_gen(0.0), 103);
  const TimeGrid grid{0.0, 1.0, 1};
  Trajectory x = make_trajectory(grid, 1, 1);
  x.states.setOnes();
  SpMat Q(1, 1);
  Q.insert(0, 0) = 1.0;
  const SpMat F(1, 1);
  Trajectory p = propagate_adjoint(gen, Q, F, x, cache);
  CHECK(p.states(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.states(0, 1) == 0.0);
}

TEST_CASE("trapezoidal quadratic cost") {
  const TimeGrid grid{0.0, 1.0, 10};
  Trajectory traj = make_trajectory(grid, 3, 1);
  traj.states.row(0).setOnes();  // x = e1 constant
  SpMat Q(3, 3);
  Q.setIdentity();
  const SpMat F(3, 3);
  CHECK(trapz_quadratic(traj, Q, Matrix::Identity(1, 1), F) ==
        doctest::Approx(10.0).epsilon(1e-14));

  // scalar x(t) = e^{-t} on [0,1] at dt = 0.01: integral (1 - e^{-2})/2.
  const TimeGrid fine{0.0, 0.01, 100};
  Trajectory decay = make_trajectory(fine, 1, 1);
  for (int k = 0; k <= 100; ++k) decay.states(0, k) = std::exp(-fine.node(k));
  SpMat q1(1, 1);
  q1.insert(0, 0) = 1.0;
  const SpMat f1(1, 1);
  const double expected = 0.5 * (1.0 - std::exp(-2.0));
  CHECK(trapz_quadratic(decay, q1, Matrix::Zero(1, 1), f1) ==
        doctest::Approx(expected).epsilon(1e-4));

  Trajectory zero = make_trajectory(grid, 3, 1);
  CHECK(trapz_quadratic(zero, Q, Matrix::Identity(1, 1), F) == 0.0);
}

TEST_CASE("exact discrete gradient matches central finite differences") {
  const int n = 7, m = 2;
  const LqProblem prob = random_problem(n, m, 91);
  CnCache cache;
  ConstantSparseGenerator gen(prob.A, kKeyProblemA);
  const TimeGrid grid{0.0, 0.5, 12};

  Matrix u(m, grid.nodes());
  RngStream rng(17);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < grid.nodes(); ++k) u(j, k) = rng.next_unit() - 0.5;
  Vector x0(n);
  for (int i = 0; i < n; ++i) x0[i] = rng.next_unit() - 0.5;

  Trajectory x = propagate(gen, prob.B, u, x0, grid, cache);
  const Matrix d = discrete_cost_gradient(gen, prob.B, prob.Q, prob.W, prob.F, x, u, cache);

  // Component-wise central differences of the discrete cost.
  const double eps = 1e-6;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < grid.nodes(); k += 3) {
      Matrix up = u, um = u;
      up(j, k) += eps;
      um(j, k) -= eps;
      const double fd = (discrete_cost(prob, gen, up, x0, grid, cache) -
                         discrete_cost(prob, gen, um, x0, grid, cache)) /
                        (2.0 * eps);
      const double w = (k == 0 || k == grid.steps) ? 0.5 : 1.0;
      const double analytic = w * grid.dt * d(j, k);
      CHECK(analytic == doctest::Approx(fd).epsilon(1e-6));
    }

  // Directional consistency at random directions: <d, v>_L2 vs FD.
  for (int trial = 0; trial < 5; ++trial) {
    Matrix v(m, grid.nodes());
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < grid.nodes(); ++k) v(j, k) = rng.next_unit() - 0.5;
    double inner = 0.0;
    for (int k = 0; k < grid.nodes(); ++k) {
      const double w = (k == 0 || k == grid.steps) ? 0.5 : 1.0;
      inner += w * grid.dt * d.col(k).dot(v.col(k));
    }
    const double fd = (discrete_cost(prob, gen, Matrix(u + eps * v), x0, grid, cache) -
                       discrete_cost(prob, gen, Matrix(u - eps * v), x0, grid, cache)) /
                      (2.0 * eps);
    CHECK(inner == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("exact discrete gradient under a piecewise RBM generator") {
  auto [prob, split] = heat_ring_example(11);
  RngStream rng(21);
  const RbmSchedule sched = draw_schedule(split, 1.0, 4.0, 0.5, rng);
  RbmWindowGenerator gen(split, sched, 0.5);
  const TimeGrid grid{0.0, 0.5, 8};
  CnCache cache;

  Matrix u(1, grid.nodes());
  for (int k = 0; k < grid.nodes(); ++k) u(0, k) = rng.next_unit() - 0.5;
  Trajectory x = propagate(gen, prob.B, u, prob.x0, grid, cache);
  const Matrix d = discrete_cost_gradient(gen, prob.B, prob.Q, prob.W, prob.F, x, u, cache);

  const double eps = 1e-7;
  for (int k : {0, 1, 4, 8}) {
    Matrix up = u, um = u;
    up(0, k) += eps;
    um(0, k) -= eps;
    CnCache c2;
    const double fd = (discrete_cost(prob, gen, up, prob.x0, grid, c2) -
                       discrete_cost(prob, gen, um, prob.x0, grid, c2)) /
                      (2.0 * eps);
    const double w = (k == 0 || k == grid.steps) ? 0.5 : 1.0;
    CHECK(w * grid.dt * d(0, k) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("factorization cache: one factorization per distinct subinterval") {
  auto [prob, split] = heat_ring_example(11);
  (void)prob;
  RngStream rng(2);
  const RbmSchedule sched = draw_schedule(split, 1.0, 15.0, 0.5, rng);
  RbmWindowGenerator gen(split, sched, 0.5);
  const TimeGrid grid{0.0, 0.5, 30};
  CnCache cache;
  const Matrix u = Matrix::Zero(1, grid.nodes());
  auto [p2, s2] = heat_ring_example(11);
  (void)s2;
  for (int rep = 0; rep < 3; ++rep)
    (void)propagate(gen, p2.B, u, p2.x0, grid, cache);
  // Never more factorizations than subintervals, regardless of steps/repeats.
  CHECK(cache.factorizations() <= sched.K);
  int distinct = 0;
  std::vector<char> seen(static_cast<size_t>(split.subset_count()), 0);
  for (int pick : sched.picks)
    if (!seen[static_cast<size_t>(pick)]) {
      seen[static_cast<size_t>(pick)] = 1;
      ++distinct;
    }
  CHECK(cache.factorizations() == distinct);
}

TEST_CASE("singular step matrix is reported") {
  SpMat G = scalar_gen(2.0);  // I - dt/2 G = 0 at dt = 1
  CHECK_THROWS_AS(CnFactorization(G, 1.0), Error);
}

}  // TEST_SUITE
