#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "rbmpc/sampler.hpp"
#include "rbmpc/system_model.hpp"
#include "rbmpc/types.hpp"

namespace rbmpc {

// Generator of the dynamics, piecewise constant on grid steps. Equal keys
// promise identical matrices, which is what the factorization cache relies on.
class StepGenerator {
 public:
  virtual ~StepGenerator() = default;
  virtual int dim() const = 0;
  virtual std::int64_t key(int step) const = 0;
  virtual const SpMat* sparse(int /*step*/) const { return nullptr; }
  virtual const Matrix* dense(int /*step*/) const { return nullptr; }

  static std::int64_t unique_id();
};

// Well-known cache keys.
inline constexpr std::int64_t kKeyProblemA = 1;
inline constexpr std::int64_t kKeySubsetBase = 1'000'000;

class ConstantSparseGenerator : public StepGenerator {
 public:
  ConstantSparseGenerator(SpMat G, std::int64_t key = StepGenerator::unique_id())
      : G_(std::move(G)), key_(key) {}
  int dim() const override { return static_cast<int>(G_.rows()); }
  std::int64_t key(int) const override { return key_; }
  const SpMat* sparse(int) const override { return &G_; }

 private:
  SpMat G_;
  std::int64_t key_;
};

class ConstantDenseGenerator : public StepGenerator {
 public:
  explicit ConstantDenseGenerator(Matrix G)
      : G_(std::move(G)), key_(StepGenerator::unique_id()) {}
  int dim() const override { return static_cast<int>(G_.rows()); }
  std::int64_t key(int) const override { return key_; }
  const Matrix* dense(int) const override { return &G_; }

 private:
  Matrix G_;
  std::int64_t key_;
};

// One dense matrix per step (used for time-varying feedback rollouts).
class DenseSequenceGenerator : public StepGenerator {
 public:
  explicit DenseSequenceGenerator(std::vector<Matrix> per_step)
      : per_step_(std::move(per_step)), base_(StepGenerator::unique_id()) {}
  int dim() const override { return per_step_.empty() ? 0 : static_cast<int>(per_step_[0].rows()); }
  std::int64_t key(int step) const override { return base_ + step; }
  const Matrix* dense(int step) const override { return &per_step_.at(static_cast<size_t>(step)); }

 private:
  std::vector<Matrix> per_step_;
  std::int64_t base_;
};

// A_R(omega, t) on a window grid: the subset assembly for the subinterval the
// step falls in. Keys are shared across windows so factorizations of the same
// subset are reused run-wide.
class RbmWindowGenerator : public StepGenerator {
 public:
  RbmWindowGenerator(const Splitting& splitting, const RbmSchedule& schedule, double dt);
  int dim() const override { return splitting_->dimension(); }
  std::int64_t key(int step) const override { return kKeySubsetBase + slot_pick(step); }
  const SpMat* sparse(int step) const override;

  int slot_pick(int step) const;  // subset index governing this step

 private:
  const Splitting* splitting_;
  RbmSchedule schedule_;
  int steps_per_slot_;
  std::unordered_map<int, SpMat> assembled_;
};

// Cached factorization of (I - dt/2 G) together with the companion operator
// (I + dt/2 G). Ring-cut generators that become strictly tridiagonal after a
// cyclic reindexing get an O(n) banded path; general sparse matrices go
// through SparseLU, dense ones through partial-pivot LU.
class CnFactorization {
 public:
  enum class Path { Banded, Sparse, Dense };

  CnFactorization(const SpMat& G, double dt);
  CnFactorization(const Matrix& G, double dt);

  Vector solve(const Vector& rhs) const;
  Vector solve_transpose(const Vector& rhs) const;
  Vector apply_plus(const Vector& x) const;            // (I + dt/2 G) x
  Vector apply_plus_transpose(const Vector& x) const;  // (I + dt/2 G)^T x

  Path path() const { return path_; }
  int dim() const { return n_; }

 private:
  struct Impl;
  void build_banded(const SpMat& G, double dt, int rotation,
                    const std::vector<double>& lower, const std::vector<double>& diag,
                    const std::vector<double>& upper);
  void build_sparse(const SpMat& G, double dt);
  void build_dense(const Matrix& G, double dt);

  Path path_ = Path::Dense;
  int n_ = 0;
  std::shared_ptr<const Impl> impl_;
};

// Per-run factorization cache keyed by (generator key, dt). Single-threaded;
// give each worker its own cache.
class CnCache {
 public:
  const CnFactorization& get(const StepGenerator& gen, int step, double dt);
  int factorizations() const { return factorizations_; }

 private:
  std::unordered_map<std::uint64_t, std::unique_ptr<CnFactorization>> map_;
  int factorizations_ = 0;
};

// Crank-Nicolson recursion
//   x_{k+1} = (I - dt/2 G_k)^{-1} [ (I + dt/2 G_k) x_k + dt/2 B (u_k + u_{k+1}) ].
Trajectory propagate(const StepGenerator& gen, const Matrix& B, const Matrix& u,
                     const Vector& x_init, const TimeGrid& grid, CnCache& cache);

// Plain CN solve of the adjoint ODE -p' = G^T p + Q x, p(T) = F x(T),
// stepped backward with the transposed step operators. Returned trajectory
// carries p in its states.
Trajectory propagate_adjoint(const StepGenerator& gen, const SpMat& Q, const SpMat& F,
                             const Trajectory& x, CnCache& cache);

// Trapezoidal cost sum_k w_k dt (x'Qx + u'Wu) + x(T)'F x(T).
double trapz_quadratic(const Trajectory& traj, const SpMat& Q, const Matrix& W,
                       const SpMat& F);

// Exact gradient of the discrete cost above with respect to the node controls,
// returned as the L2 Riesz representative d_k (so <d, v>_L2 is the directional
// derivative). Computed from the transpose of the CN recursion, not from the
// adjoint ODE, so it is exact for the discrete functional.
Matrix discrete_cost_gradient(const StepGenerator& gen, const Matrix& B, const SpMat& Q,
                              const Matrix& W, const SpMat& F, const Trajectory& x,
                              const Matrix& u, CnCache& cache);

// Trapezoid-weighted squared L2 norm of a node-sampled signal (columns).
double l2_trapz_norm2(const Matrix& signal, const TimeGrid& grid);

// Dense one-step CN propagator (I - dt/2 G)^{-1}(I + dt/2 G); test-scale only.
Matrix cn_propagator(const SpMat& G, double dt);

}  // namespace rbmpc
