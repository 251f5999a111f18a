#include "rbmpc/integrator.hpp"

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include <atomic>
#include <bit>
#include <cmath>

namespace rbmpc {

std::int64_t StepGenerator::unique_id() {
  static std::atomic<std::int64_t> counter{std::int64_t{1} << 40};
  return counter.fetch_add(1);
}

RbmWindowGenerator::RbmWindowGenerator(const Splitting& splitting,
                                       const RbmSchedule& schedule, double dt)
    : splitting_(&splitting), schedule_(schedule) {
  steps_per_slot_ = exact_ratio(schedule.h, dt, "RBM spacing h over the integrator step");
  if (steps_per_slot_ < 1) fail(ErrorCode::GridMismatch, "h must be at least one step");
  for (int pick : schedule_.picks)
    if (!assembled_.count(pick)) assembled_.emplace(pick, splitting.assemble(pick));
}

int RbmWindowGenerator::slot_pick(int step) const {
  const int slot = step / steps_per_slot_;
  if (slot < 0 || slot >= schedule_.K)
    fail(ErrorCode::OutOfHorizon, "step beyond the schedule horizon");
  return schedule_.picks[static_cast<size_t>(slot)];
}

const SpMat* RbmWindowGenerator::sparse(int step) const {
  return &assembled_.at(slot_pick(step));
}

// ---------------------------------------------------------------------------
// CnFactorization

struct CnFactorization::Impl {
  // banded path (arrays live in rotated index space)
  std::vector<int> perm;  // original index -> rotated position
  std::vector<double> dL, mL, uL;
  std::vector<double> Rl, Rd, Ru;
  // sparse path
  std::unique_ptr<Eigen::SparseLU<SpMat>> slu;
  SpMat Rsp;
  // dense path
  std::unique_ptr<Eigen::PartialPivLU<Matrix>> dlu;
  Matrix Rdn;
};

namespace {

struct BandedLayout {
  int rotation = 0;
  std::vector<double> lower, diag, upper;  // bands of G in rotated space
};

// A generator qualifies for the banded path when its pattern touches only
// cyclically adjacent nodes and at least one adjacent coupling is absent, so
// a cyclic reindexing makes it strictly tridiagonal. A full cyclic band (the
// uncut ring) does not qualify.
bool detect_ring_cut(const SpMat& G, BandedLayout* out) {
  const int n = static_cast<int>(G.rows());
  if (n < 3) return false;
  std::vector<char> link(static_cast<size_t>(n), 0);
  for (int k = 0; k < G.outerSize(); ++k)
    for (SpMat::InnerIterator it(G, k); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      if (i == j) continue;
      if ((j - i + n) % n == 1) link[static_cast<size_t>(i)] = 1;
      else if ((i - j + n) % n == 1) link[static_cast<size_t>(j)] = 1;
      else return false;
    }
  int cut = -1;
  for (int l = 0; l < n; ++l)
    if (!link[static_cast<size_t>(l)]) {
      cut = l;
      break;
    }
  if (cut < 0) return false;

  out->rotation = (cut + 1) % n;
  out->lower.assign(static_cast<size_t>(n), 0.0);
  out->diag.assign(static_cast<size_t>(n), 0.0);
  out->upper.assign(static_cast<size_t>(n), 0.0);
  auto rot = [&](int i) { return (i - out->rotation + n) % n; };
  for (int k = 0; k < G.outerSize(); ++k)
    for (SpMat::InnerIterator it(G, k); it; ++it) {
      const int i = rot(static_cast<int>(it.row()));
      const int j = rot(static_cast<int>(it.col()));
      if (i == j) out->diag[static_cast<size_t>(i)] += it.value();
      else if (i == j + 1) out->lower[static_cast<size_t>(i)] += it.value();
      else if (j == i + 1) out->upper[static_cast<size_t>(i)] += it.value();
      else return false;
    }
  return true;
}

std::uint64_t cache_key(std::int64_t gen_key, double dt) {
  const std::uint64_t a = static_cast<std::uint64_t>(gen_key);
  const std::uint64_t b = std::bit_cast<std::uint64_t>(dt);
  std::uint64_t h = a * 0x9E3779B97F4A7C15ULL;
  h ^= b + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

void CnFactorization::build_banded(const SpMat& G, double dt, int rotation,
                                   const std::vector<double>& lower,
                                   const std::vector<double>& diag,
                                   const std::vector<double>& upper) {
  const int n = static_cast<int>(G.rows());
  auto impl = std::make_shared<Impl>();
  impl->perm.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) impl->perm[static_cast<size_t>(i)] = (i - rotation + n) % n;

  impl->dL.resize(static_cast<size_t>(n));
  impl->mL.assign(static_cast<size_t>(n), 0.0);
  impl->uL.assign(static_cast<size_t>(n), 0.0);
  impl->Rl.assign(static_cast<size_t>(n), 0.0);
  impl->Rd.resize(static_cast<size_t>(n));
  impl->Ru.assign(static_cast<size_t>(n), 0.0);

  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    impl->dL[i] = 1.0 - 0.5 * dt * diag[i];
    impl->Rd[i] = 1.0 + 0.5 * dt * diag[i];
    if (i > 0) impl->Rl[i] = 0.5 * dt * lower[i];
    if (i < n - 1) {
      impl->uL[i] = -0.5 * dt * upper[i];
      impl->Ru[i] = 0.5 * dt * upper[i];
    }
    scale = std::max({scale, std::abs(impl->dL[i]), std::abs(impl->uL[i])});
  }
  // LU without pivoting; bail out to the sparse path if a pivot collapses.
  for (int i = 1; i < n; ++i) {
    const double piv = impl->dL[i - 1];
    if (std::abs(piv) <= 1e-13 * scale) {
      build_sparse(G, dt);
      return;
    }
    const double m = (-0.5 * dt * lower[i]) / piv;
    impl->mL[i] = m;
    impl->dL[i] -= m * impl->uL[i - 1];
  }
  if (std::abs(impl->dL[n - 1]) <= 1e-13 * scale) {
    build_sparse(G, dt);
    return;
  }
  path_ = Path::Banded;
  impl_ = std::move(impl);
}

void CnFactorization::build_sparse(const SpMat& G, double dt) {
  const int n = static_cast<int>(G.rows());
  SpMat ident(n, n);
  ident.setIdentity();
  SpMat L = SpMat(ident - G * (0.5 * dt));
  L.makeCompressed();
  auto impl = std::make_shared<Impl>();
  impl->slu = std::make_unique<Eigen::SparseLU<SpMat>>();
  impl->slu->compute(L);
  if (impl->slu->info() != Eigen::Success)
    fail(ErrorCode::SingularStepMatrix, "sparse CN step matrix is singular");
  impl->Rsp = SpMat(ident + G * (0.5 * dt));
  impl->Rsp.makeCompressed();
  path_ = Path::Sparse;
  impl_ = std::move(impl);
}

void CnFactorization::build_dense(const Matrix& G, double dt) {
  const int n = static_cast<int>(G.rows());
  Matrix L = Matrix::Identity(n, n) - 0.5 * dt * G;
  auto impl = std::make_shared<Impl>();
  impl->dlu = std::make_unique<Eigen::PartialPivLU<Matrix>>(L);
  if (!(impl->dlu->rcond() > 1e-15))
    fail(ErrorCode::SingularStepMatrix, "dense CN step matrix is singular");
  impl->Rdn = Matrix::Identity(n, n) + 0.5 * dt * G;
  path_ = Path::Dense;
  impl_ = std::move(impl);
}

CnFactorization::CnFactorization(const SpMat& G, double dt)
    : n_(static_cast<int>(G.rows())) {
  if (G.rows() != G.cols()) fail(ErrorCode::BadDimension, "generator must be square");
  BandedLayout layout;
  if (detect_ring_cut(G, &layout))
    build_banded(G, dt, layout.rotation, layout.lower, layout.diag, layout.upper);
  else if (n_ <= 8)
    build_dense(Matrix(G), dt);
  else
    build_sparse(G, dt);
}

CnFactorization::CnFactorization(const Matrix& G, double dt)
    : n_(static_cast<int>(G.rows())) {
  if (G.rows() != G.cols()) fail(ErrorCode::BadDimension, "generator must be square");
  build_dense(G, dt);
}

Vector CnFactorization::solve(const Vector& rhs) const {
  const Impl& im = *impl_;
  switch (path_) {
    case Path::Banded: {
      const int n = n_;
      Vector b(n), x(n);
      for (int i = 0; i < n; ++i) b[im.perm[static_cast<size_t>(i)]] = rhs[i];
      for (int i = 1; i < n; ++i) b[i] -= im.mL[static_cast<size_t>(i)] * b[i - 1];
      b[n - 1] /= im.dL[static_cast<size_t>(n - 1)];
      for (int i = n - 2; i >= 0; --i)
        b[i] = (b[i] - im.uL[static_cast<size_t>(i)] * b[i + 1]) / im.dL[static_cast<size_t>(i)];
      for (int i = 0; i < n; ++i) x[i] = b[im.perm[static_cast<size_t>(i)]];
      return x;
    }
    case Path::Sparse:
      return im.slu->solve(rhs);
    case Path::Dense:
      return im.dlu->solve(rhs);
  }
  fail(ErrorCode::SingularStepMatrix, "uninitialized factorization");
}

Vector CnFactorization::solve_transpose(const Vector& rhs) const {
  const Impl& im = *impl_;
  switch (path_) {
    case Path::Banded: {
      const int n = n_;
      Vector b(n), x(n);
      for (int i = 0; i < n; ++i) b[im.perm[static_cast<size_t>(i)]] = rhs[i];
      // L = Lambda U  =>  L^T = U^T Lambda^T
      b[0] /= im.dL[0];
      for (int i = 1; i < n; ++i)
        b[i] = (b[i] - im.uL[static_cast<size_t>(i - 1)] * b[i - 1]) / im.dL[static_cast<size_t>(i)];
      for (int i = n - 2; i >= 0; --i) b[i] -= im.mL[static_cast<size_t>(i + 1)] * b[i + 1];
      for (int i = 0; i < n; ++i) x[i] = b[im.perm[static_cast<size_t>(i)]];
      return x;
    }
    case Path::Sparse:
      return im.slu->transpose().solve(rhs);
    case Path::Dense:
      return im.dlu->transpose().solve(rhs);
  }
  fail(ErrorCode::SingularStepMatrix, "uninitialized factorization");
}

Vector CnFactorization::apply_plus(const Vector& x) const {
  const Impl& im = *impl_;
  switch (path_) {
    case Path::Banded: {
      const int n = n_;
      Vector xr(n), yr(n), y(n);
      for (int i = 0; i < n; ++i) xr[im.perm[static_cast<size_t>(i)]] = x[i];
      for (int i = 0; i < n; ++i) {
        double v = im.Rd[static_cast<size_t>(i)] * xr[i];
        if (i > 0) v += im.Rl[static_cast<size_t>(i)] * xr[i - 1];
        if (i < n - 1) v += im.Ru[static_cast<size_t>(i)] * xr[i + 1];
        yr[i] = v;
      }
      for (int i = 0; i < n; ++i) y[i] = yr[im.perm[static_cast<size_t>(i)]];
      return y;
    }
    case Path::Sparse:
      return im.Rsp * x;
    case Path::Dense:
      return im.Rdn * x;
  }
  fail(ErrorCode::SingularStepMatrix, "uninitialized factorization");
}

Vector CnFactorization::apply_plus_transpose(const Vector& x) const {
  const Impl& im = *impl_;
  switch (path_) {
    case Path::Banded: {
      const int n = n_;
      Vector xr(n), yr(n), y(n);
      for (int i = 0; i < n; ++i) xr[im.perm[static_cast<size_t>(i)]] = x[i];
      for (int i = 0; i < n; ++i) {
        double v = im.Rd[static_cast<size_t>(i)] * xr[i];
        if (i > 0) v += im.Ru[static_cast<size_t>(i - 1)] * xr[i - 1];
        if (i < n - 1) v += im.Rl[static_cast<size_t>(i + 1)] * xr[i + 1];
        yr[i] = v;
      }
      for (int i = 0; i < n; ++i) y[i] = yr[im.perm[static_cast<size_t>(i)]];
      return y;
    }
    case Path::Sparse:
      return im.Rsp.transpose() * x;
    case Path::Dense:
      return im.Rdn.transpose() * x;
  }
  fail(ErrorCode::SingularStepMatrix, "uninitialized factorization");
}

const CnFactorization& CnCache::get(const StepGenerator& gen, int step, double dt) {
  const std::uint64_t key = cache_key(gen.key(step), dt);
  auto it = map_.find(key);
  if (it != map_.end()) return *it->second;
  std::unique_ptr<CnFactorization> fact;
  if (const SpMat* S = gen.sparse(step)) fact = std::make_unique<CnFactorization>(*S, dt);
  else if (const Matrix* D = gen.dense(step)) fact = std::make_unique<CnFactorization>(*D, dt);
  else fail(ErrorCode::BadDimension, "generator exposes no matrix");
  ++factorizations_;
  return *map_.emplace(key, std::move(fact)).first->second;
}

// ---------------------------------------------------------------------------
// Stepping, cost, gradient

Trajectory propagate(const StepGenerator& gen, const Matrix& B, const Matrix& u,
                     const Vector& x_init, const TimeGrid& grid, CnCache& cache) {
  const int n = static_cast<int>(x_init.size());
  const int m = static_cast<int>(B.cols());
  if (B.rows() != n) fail(ErrorCode::BadDimension, "B rows must match the state size");
  if (u.rows() != m || u.cols() != grid.nodes())
    fail(ErrorCode::BadDimension, "control samples must be m x (steps+1)");

  Trajectory traj = make_trajectory(grid, n, m);
  traj.controls = u;
  traj.states.col(0) = x_init;
  const double dt = grid.dt;
  for (int k = 0; k < grid.steps; ++k) {
    const CnFactorization& f = cache.get(gen, k, dt);
    Vector rhs = f.apply_plus(traj.states.col(k));
    rhs.noalias() += (0.5 * dt) * (B * (u.col(k) + u.col(k + 1)));
    traj.states.col(k + 1) = f.solve(rhs);
  }
  return traj;
}

Trajectory propagate_adjoint(const StepGenerator& gen, const SpMat& Q, const SpMat& F,
                             const Trajectory& x, CnCache& cache) {
  const TimeGrid& grid = x.grid;
  const int n = x.n();
  const int N = grid.steps;
  Trajectory adj = make_trajectory(grid, n, x.m());
  const double dt = grid.dt;
  adj.states.col(N) = F * x.states.col(N);
  for (int k = N - 1; k >= 0; --k) {
    const CnFactorization& f = cache.get(gen, k, dt);
    Vector rhs = f.apply_plus_transpose(adj.states.col(k + 1));
    rhs.noalias() += (0.5 * dt) * (Q * (x.states.col(k) + x.states.col(k + 1)));
    adj.states.col(k) = f.solve_transpose(rhs);
  }
  return adj;
}

double trapz_quadratic(const Trajectory& traj, const SpMat& Q, const Matrix& W,
                       const SpMat& F) {
  const int N = traj.grid.steps;
  const double dt = traj.grid.dt;
  double acc = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double w = (k == 0 || k == N) ? 0.5 : 1.0;
    const Vector xk = traj.states.col(k);
    const Vector uk = traj.controls.col(k);
    acc += w * dt * (xk.dot(Q * xk) + uk.dot(W * uk));
  }
  const Vector xT = traj.states.col(N);
  return acc + xT.dot(F * xT);
}

Matrix discrete_cost_gradient(const StepGenerator& gen, const Matrix& B, const SpMat& Q,
                              const Matrix& W, const SpMat& F, const Trajectory& x,
                              const Matrix& u, CnCache& cache) {
  const TimeGrid& grid = x.grid;
  const int N = grid.steps;
  const double dt = grid.dt;
  if (N < 1) fail(ErrorCode::BadDimension, "gradient needs at least one step");
  const int m = static_cast<int>(B.cols());
  Matrix d(m, N + 1);

  // Multiplier recursion (transpose of the CN recursion):
  //   L_{N-1}^T phi_N = 2 F x_N + dt Q x_N
  //   L_{k-1}^T phi_k = R_k^T phi_{k+1} + 2 dt Q x_k,   k = N-1..1
  Vector phi_next =
      cache.get(gen, N - 1, dt)
          .solve_transpose(2.0 * (F * x.states.col(N)) + dt * (Q * x.states.col(N)));
  d.col(N) = 2.0 * (W * u.col(N)) + B.transpose() * phi_next;
  for (int k = N - 1; k >= 1; --k) {
    Vector rhs = cache.get(gen, k, dt).apply_plus_transpose(phi_next);
    rhs.noalias() += 2.0 * dt * (Q * x.states.col(k));
    Vector phi = cache.get(gen, k - 1, dt).solve_transpose(rhs);
    d.col(k) = 2.0 * (W * u.col(k)) + 0.5 * (B.transpose() * (phi + phi_next));
    phi_next = std::move(phi);
  }
  d.col(0) = 2.0 * (W * u.col(0)) + B.transpose() * phi_next;
  return d;
}

double l2_trapz_norm2(const Matrix& signal, const TimeGrid& grid) {
  const int N = grid.steps;
  if (signal.cols() != N + 1) fail(ErrorCode::BadDimension, "signal does not match grid");
  double acc = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double w = (k == 0 || k == N) ? 0.5 : 1.0;
    acc += w * grid.dt * signal.col(k).squaredNorm();
  }
  return acc;
}

Matrix cn_propagator(const SpMat& G, double dt) {
  const int n = static_cast<int>(G.rows());
  Matrix L = Matrix::Identity(n, n) - 0.5 * dt * Matrix(G);
  Matrix R = Matrix::Identity(n, n) + 0.5 * dt * Matrix(G);
  return Eigen::PartialPivLU<Matrix>(L).solve(R);
}

}  // namespace rbmpc
