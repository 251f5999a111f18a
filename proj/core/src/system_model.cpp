#include "rbmpc/system_model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <set>

#include "rbmpc/rng.hpp"

namespace rbmpc {

namespace {

double inf_norm(const SpMat& M) {
  Vector row_sums = Vector::Zero(M.rows());
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      row_sums[it.row()] += std::abs(it.value());
  return row_sums.size() == 0 ? 0.0 : row_sums.maxCoeff();
}

bool is_symmetric(const SpMat& M, double rel_tol = 1e-10) {
  SpMat D = SpMat(M.transpose()) - M;
  const double scale = std::max(1e-300, inf_norm(M));
  return inf_norm(D) <= rel_tol * scale;
}

bool is_diagonal(const SpMat& M) {
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) return false;
  return true;
}

// PSD within eps = 1e-10 * scale. Diagonal and small matrices are checked
// exactly; large general matrices use a shifted sparse LDLT certificate.
bool is_psd(const SpMat& S, double* min_eig_out = nullptr) {
  const double scale = std::max(1.0, inf_norm(S));
  const double eps = 1e-10 * scale;
  if (is_diagonal(S)) {
    double lo = 0.0;
    for (int k = 0; k < S.outerSize(); ++k)
      for (SpMat::InnerIterator it(S, k); it; ++it)
        lo = std::min(lo, it.value());
    if (min_eig_out) *min_eig_out = lo;
    return lo >= -eps;
  }
  if (S.rows() <= 256) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(S), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (min_eig_out) *min_eig_out = lo;
    return lo >= -eps;
  }
  SpMat shifted = S;
  SpMat ident(S.rows(), S.cols());
  ident.setIdentity();
  shifted += ident * eps;
  Eigen::SimplicialLDLT<SpMat> ldlt(shifted);
  const bool ok = ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= -eps;
  if (min_eig_out) *min_eig_out = ok ? -eps : -scale;
  return ok;
}

double power_iteration_sigma(const SpMat& M) {
  const int n = static_cast<int>(M.cols());
  RngStream rng(0x5EC7A11);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.next_unit() - 0.5;
  v.normalize();
  const SpMat Mt = SpMat(M.transpose());
  double sigma2 = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Vector w = M * v;
    const double s2 = w.squaredNorm();
    Vector u = Mt * w;
    const double un = u.norm();
    if (un == 0.0) return 0.0;
    v = u / un;
    if (it > 2 && std::abs(s2 - sigma2) <= 1e-13 * s2 + 1e-300) {
      sigma2 = s2;
      break;
    }
    sigma2 = s2;
  }
  return std::sqrt(sigma2);
}

}  // namespace

double spectral_norm(const Matrix& M) {
  if (!M.allFinite()) fail(ErrorCode::BadDimension, "spectral_norm: non-finite entries");
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  if (M.rows() == 1 && M.cols() == 1) return std::abs(M(0, 0));
  Eigen::BDCSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

double spectral_norm(const SpMat& M) {
  if (std::max(M.rows(), M.cols()) <= 256) return spectral_norm(Matrix(M));
  return power_iteration_sigma(M);
}

double max_symmetric_eigenvalue(const SpMat& G) {
  SpMat S = (SpMat(G.transpose()) + G) * 0.5;
  const double scale = std::max(1.0, inf_norm(S));
  if (S.rows() <= 256) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(S), Eigen::EigenvaluesOnly);
    double lam = es.eigenvalues().maxCoeff();
    if (std::abs(lam) <= 1e-12 * scale) lam = 0.0;
    return lam;
  }
  // Negative-semidefinite certificate: -S + eps I admits an LDLT with
  // nonnegative pivots iff lambda_max(S) <= eps.
  const double eps = 1e-12 * scale;
  SpMat shifted = SpMat(S * -1.0);
  SpMat ident(S.rows(), S.cols());
  ident.setIdentity();
  shifted += ident * eps;
  Eigen::SimplicialLDLT<SpMat> ldlt(shifted);
  if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= -eps) return 0.0;
  // Not dissipative: shift S into the PSD range and power-iterate.
  SpMat shifted_up = S;
  shifted_up += ident * scale;
  const double top = power_iteration_sigma(shifted_up);
  double lam = top - scale;
  if (std::abs(lam) <= 1e-10 * scale) lam = 0.0;
  return lam;
}

void LqProblem::validate() const {
  const int nn = n();
  const int mm = m();
  if (A.rows() != nn || A.cols() != nn) fail(ErrorCode::BadDimension, "A must be square");
  if (B.rows() != nn) fail(ErrorCode::BadDimension, "B row count must match A");
  if (Q.rows() != nn || Q.cols() != nn) fail(ErrorCode::BadDimension, "Q must be n x n");
  if (F.rows() != nn || F.cols() != nn) fail(ErrorCode::BadDimension, "F must be n x n");
  if (W.rows() != mm || W.cols() != mm) fail(ErrorCode::BadDimension, "W must be m x m");
  if (x0.size() != nn) fail(ErrorCode::BadDimension, "x0 must have n entries");

  if (!is_symmetric(Q)) fail(ErrorCode::BadDimension, "Q must be symmetric");
  if (!is_symmetric(F)) fail(ErrorCode::BadDimension, "F must be symmetric");
  if (!W.isApprox(W.transpose(), 1e-10)) fail(ErrorCode::BadDimension, "W must be symmetric");

  if (!is_psd(Q)) fail(ErrorCode::BadDimension, "Q must be positive semidefinite");
  if (!is_psd(F)) fail(ErrorCode::BadDimension, "F must be positive semidefinite");
  Eigen::SelfAdjointEigenSolver<Matrix> es(W, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-14 * std::max(1.0, W.norm()))
    fail(ErrorCode::BadDimension, "W must be positive definite");
}

SpMat Splitting::assemble(int subset_index) const {
  if (subset_index < 0 || subset_index >= subset_count())
    fail(ErrorCode::BadDimension, "subset index out of range");
  const int n = dimension();
  std::vector<Eigen::Triplet<double>> trips;
  for (int m : subsets[subset_index].members) {
    const double inv_pi = 1.0 / pis[m];
    for (int k = 0; k < parts[m].outerSize(); ++k)
      for (SpMat::InnerIterator it(parts[m], k); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value() * inv_pi);
  }
  SpMat out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

bool Splitting::is_full_batch() const {
  if (subsets.size() != 1) return false;
  return static_cast<int>(subsets[0].members.size()) == part_count();
}

Splitting build_splitting(std::vector<SpMat> parts, std::vector<Subset> subsets) {
  if (parts.empty()) fail(ErrorCode::BadDimension, "splitting needs at least one part");
  const int n = static_cast<int>(parts[0].rows());
  for (const auto& p : parts)
    if (p.rows() != n || p.cols() != n)
      fail(ErrorCode::BadDimension, "all parts must be square with equal size");
  if (subsets.empty()) fail(ErrorCode::ProbabilityMassError, "no subsets listed");

  const int M = static_cast<int>(parts.size());
  double mass = 0.0;
  for (const auto& s : subsets) {
    if (s.probability <= 0.0)
      fail(ErrorCode::ProbabilityMassError, "listed subsets must have positive probability");
    mass += s.probability;
    std::set<int> seen;
    for (int m : s.members) {
      if (m < 0 || m >= M) fail(ErrorCode::BadDimension, "subset index outside part range");
      if (!seen.insert(m).second) fail(ErrorCode::BadDimension, "duplicate index in subset");
    }
  }
  if (std::abs(mass - 1.0) > 1e-12)
    fail(ErrorCode::ProbabilityMassError, "subset probabilities must sum to 1");

  Splitting out;
  out.parts = std::move(parts);
  out.subsets = std::move(subsets);

  out.pis = Vector::Zero(M);
  for (const auto& s : out.subsets)
    for (int m : s.members) out.pis[m] += s.probability;
  for (int m = 0; m < M; ++m)
    if (out.pis[m] <= 0.0)
      fail(ErrorCode::ZeroInclusionProbability,
           "part " + std::to_string(m + 1) + " has zero inclusion probability");

  out.sum = out.parts[0];
  for (int m = 1; m < M; ++m) out.sum = SpMat(out.sum + out.parts[m]);

  out.cumulative_.resize(out.subsets.size());
  double acc = 0.0;
  for (size_t i = 0; i < out.subsets.size(); ++i) {
    acc += out.subsets[i].probability;
    out.cumulative_[i] = acc;
  }
  out.cumulative_.back() = 1.0;

  out.variance = 0.0;
  out.mu_r = 0.0;
  for (int w = 0; w < out.subset_count(); ++w) {
    SpMat piece = out.assemble(w);
    SpMat dev = SpMat(out.sum - piece);
    const double dev_norm = spectral_norm(dev);
    out.variance += out.subsets[w].probability * dev_norm * dev_norm;
    out.mu_r = std::max(out.mu_r, max_symmetric_eigenvalue(piece));
  }
  out.mu_r = std::max(0.0, out.mu_r);
  if (out.is_full_batch()) out.variance = 0.0;
  return out;
}

Splitting full_batch_splitting(const SpMat& A) {
  std::vector<SpMat> parts{A};
  Subset all;
  all.members = {0};
  all.probability = 1.0;
  return build_splitting(std::move(parts), {all});
}

std::pair<LqProblem, Splitting> heat_ring_example(int n) {
  return heat_ring_example(n, static_cast<double>(n - 1) * static_cast<double>(n - 1));
}

std::pair<LqProblem, Splitting> heat_ring_example(int n, double kappa) {
  if (n < 11 || (n - 1) % 10 != 0)
    fail(ErrorCode::BadDimension,
         "heat ring needs n >= 11 with n-1 divisible by 10, got n=" + std::to_string(n));
  if (kappa <= 0.0) fail(ErrorCode::BadDimension, "diffusivity must be positive");
  const double s = kappa;

  std::vector<SpMat> parts;
  parts.reserve(n);
  for (int m = 0; m < n - 1; ++m) {
    SpMat part(n, n);
    std::vector<Eigen::Triplet<double>> t{
        {m, m, -s}, {m, m + 1, s}, {m + 1, m, s}, {m + 1, m + 1, -s}};
    part.setFromTriplets(t.begin(), t.end());
    parts.push_back(std::move(part));
  }
  {
    SpMat corner(n, n);
    std::vector<Eigen::Triplet<double>> t{
        {0, 0, -s}, {0, n - 1, s}, {n - 1, 0, s}, {n - 1, n - 1, -s}};
    corner.setFromTriplets(t.begin(), t.end());
    parts.push_back(std::move(corner));
  }

  std::vector<Subset> subsets(n);
  for (int omit = 0; omit < n; ++omit) {
    subsets[omit].probability = 1.0 / static_cast<double>(n);
    subsets[omit].members.reserve(n - 1);
    for (int m = 0; m < n; ++m)
      if (m != omit) subsets[omit].members.push_back(m);
  }

  Splitting split = build_splitting(std::move(parts), std::move(subsets));

  LqProblem prob;
  prob.A = split.sum;
  prob.B = Matrix::Zero(n, 1);
  for (int i = 0; i < (n - 1) / 10; ++i) prob.B(i, 0) = 1.0;
  SpMat Q(n, n);
  Q.setIdentity();
  prob.Q = SpMat(Q / static_cast<double>(n - 1));
  prob.W = Matrix::Constant(1, 1, 1.0);
  prob.F = SpMat(n, n);
  prob.x0 = Vector::Ones(n);
  prob.validate();
  return {std::move(prob), std::move(split)};
}

}  // namespace rbmpc
