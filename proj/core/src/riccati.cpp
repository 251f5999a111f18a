#include "rbmpc/riccati.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <complex>

namespace rbmpc {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;
using RowMajorComplex =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix control_quadratic(const LqProblem& prob) {
  Eigen::LLT<Matrix> llt(prob.W);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::BadDimension, "W must be positive definite");
  return prob.B * llt.solve(prob.B.transpose());
}

struct RdeStepper {
  const Matrix* S;
  const Matrix* Q;

  // Right side of the backward sweep dP/ds = G'P + PG - PSP + Q (s = T - t).
  Matrix rate(const Matrix& P, const SpMat* Gs, const Matrix* Gd) const {
    Matrix GtP;
    if (Gs) GtP.noalias() = SpMat(Gs->transpose()) * P;
    else GtP.noalias() = Gd->transpose() * P;
    Matrix out = GtP + GtP.transpose();
    out.noalias() -= P * (*S) * P;
    out += *Q;
    return out;
  }

  Matrix advance(Matrix P, const SpMat* Gs, const Matrix* Gd, double span,
                 int substeps) const {
    const double h = span / static_cast<double>(substeps);
    for (int s = 0; s < substeps; ++s) {
      const Matrix k1 = rate(P, Gs, Gd);
      const Matrix k2 = rate(P + (0.5 * h) * k1, Gs, Gd);
      const Matrix k3 = rate(P + (0.5 * h) * k2, Gs, Gd);
      const Matrix k4 = rate(P + h * k3, Gs, Gd);
      P += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!P.allFinite()) return P;
    }
    return P;
  }
};

}  // namespace

RiccatiPath solve_rde(const LqProblem& prob, const StepGenerator& gen,
                      const TimeGrid& grid, const Matrix& terminal,
                      const RdeOptions& opts) {
  const int n = prob.n();
  if (terminal.rows() != n || terminal.cols() != n)
    fail(ErrorCode::BadDimension, "terminal weight must be n x n");
  const Matrix S = control_quadratic(prob);
  const Matrix Q = Matrix(prob.Q);
  RdeStepper stepper{&S, &Q};

  RiccatiPath path;
  path.grid = grid;
  path.P.resize(static_cast<size_t>(grid.nodes()));
  path.P[static_cast<size_t>(grid.steps)] = 0.5 * (terminal + terminal.transpose());

  long substeps = std::max(1, opts.initial_substeps);
  const long max_substeps = static_cast<long>(std::pow(4.0, opts.max_refine_level));

  for (int k = grid.steps - 1; k >= 0; --k) {
    const SpMat* Gs = gen.sparse(k);
    const Matrix* Gd = Gs ? nullptr : gen.dense(k);
    if (!Gs && !Gd) fail(ErrorCode::BadDimension, "generator exposes no matrix");
    const Matrix& P_end = path.P[static_cast<size_t>(k + 1)];

    Matrix coarse = stepper.advance(P_end, Gs, Gd, grid.dt, static_cast<int>(substeps));
    for (;;) {
      Matrix fine = stepper.advance(P_end, Gs, Gd, grid.dt, static_cast<int>(4 * substeps));
      const bool fine_ok = fine.allFinite();
      const double err = fine_ok && coarse.allFinite()
                             ? (coarse - fine).norm()
                             : std::numeric_limits<double>::infinity();
      if (fine_ok && err <= opts.local_tol * (1.0 + fine.norm())) {
        coarse = std::move(fine);
        break;
      }
      substeps *= 4;
      if (substeps > max_substeps)
        fail(ErrorCode::NoConvergence, "RDE step refinement exceeded the substep cap");
      coarse = fine_ok ? std::move(fine)
                       : stepper.advance(P_end, Gs, Gd, grid.dt, static_cast<int>(substeps));
    }
    Matrix P = 0.5 * (coarse + coarse.transpose());
    if (!P.allFinite() || P.norm() > opts.blowup)
      fail(ErrorCode::RiccatiBlowup, "Riccati solution escaped the finite-norm guard");
    path.P[static_cast<size_t>(k)] = std::move(P);
  }
  return path;
}

RiccatiPath solve_rde(const LqProblem& prob, const StepGenerator& gen,
                      const TimeGrid& grid) {
  return solve_rde(prob, gen, grid, Matrix(prob.F));
}

Matrix solve_lyapunov(const Matrix& Acl, const Matrix& C) {
  const int n = static_cast<int>(Acl.rows());
  const ComplexMatrix A = Acl.cast<std::complex<double>>();
  Eigen::ComplexSchur<ComplexMatrix> schur(A);
  if (schur.info() != Eigen::Success)
    fail(ErrorCode::NoConvergence, "Schur decomposition failed in the Lyapunov solve");
  const ComplexMatrix& T = schur.matrixT();
  const ComplexMatrix& U = schur.matrixU();
  const RowMajorComplex Th = T.adjoint();

  ComplexMatrix Ct = U.adjoint() * C.cast<std::complex<double>>() * U;
  ComplexMatrix Y = ComplexMatrix::Zero(n, n);
  Eigen::VectorXcd rhs(n);
  for (int j = 0; j < n; ++j) {
    rhs = -Ct.col(j);
    if (j > 0) rhs.noalias() -= Y.leftCols(j) * T.col(j).head(j);
    const std::complex<double> tjj = T(j, j);
    for (int i = 0; i < n; ++i) {
      std::complex<double> v = rhs[i];
      if (i > 0) v -= (Th.row(i).head(i) * Y.col(j).head(i)).value();
      const std::complex<double> denom = Th(i, i) + tjj;
      if (std::abs(denom) < 1e-300)
        fail(ErrorCode::NotStabilizing, "Lyapunov solve hit a resonant eigenvalue pair");
      Y(i, j) = v / denom;
    }
  }
  Matrix X = (U * Y * U.adjoint()).real();
  return 0.5 * (X + X.transpose());
}

double are_residual(const LqProblem& prob, const Matrix& P) {
  const Matrix A = Matrix(prob.A);
  const Matrix S = control_quadratic(prob);
  Matrix res = A.transpose() * P + P * A - P * S * P + Matrix(prob.Q);
  return spectral_norm(res);
}

StabilizedLoop solve_are(const LqProblem& prob, const AreOptions& opts) {
  const int n = prob.n();
  const Matrix A = Matrix(prob.A);
  const Matrix S = control_quadratic(prob);
  const Matrix Q = Matrix(prob.Q);

  // Matrix sign of the Hamiltonian, Newton iteration with determinant scaling.
  Matrix Z(2 * n, 2 * n);
  Z << A, -S, -Q, -A.transpose();
  Matrix Z_prev = Z;
  for (int it = 0; it < opts.max_sign_iters; ++it) {
    Eigen::PartialPivLU<Matrix> lu(Z);
    double logdet = 0.0;
    for (int i = 0; i < 2 * n; ++i) logdet += std::log(std::abs(lu.matrixLU()(i, i)));
    const double c = std::exp(-logdet / static_cast<double>(2 * n));
    if (!std::isfinite(c) || c <= 0.0)
      fail(ErrorCode::NoConvergence, "sign iteration hit a singular Hamiltonian iterate");
    Matrix Zinv = lu.inverse();
    Z_prev = Z;
    Z = 0.5 * (c * Z + Zinv / c);
    if (!Z.allFinite())
      fail(ErrorCode::NoConvergence, "sign iteration diverged");
    if ((Z - Z_prev).norm() <= 1e-14 * Z.norm()) break;
  }

  // Stable subspace: (sign(H) + I) [x; Px] = 0.
  Matrix lhs(2 * n, n), rhs(2 * n, n);
  lhs << Z.block(0, n, n, n), Z.block(n, n, n, n) + Matrix::Identity(n, n);
  rhs << -(Z.block(0, 0, n, n) + Matrix::Identity(n, n)), -Z.block(n, 0, n, n);
  Matrix P = lhs.colPivHouseholderQr().solve(rhs);
  P = 0.5 * (P + P.transpose());

  // Newton-Kleinman polish: P+ solves Acl'P+ + P+ Acl + Q + P S P = 0.
  double best_res = are_residual(prob, P);
  Matrix best_P = P;
  for (int it = 0; it < opts.max_newton_iters; ++it) {
    if (best_res <= 1e-13 * std::max(1.0, spectral_norm(Matrix(prob.Q)))) break;
    const Matrix Acl = A - S * P;
    Matrix X;
    try {
      X = solve_lyapunov(Acl, Q + P * S * P);
    } catch (const Error&) {
      break;
    }
    if (!X.allFinite()) break;
    P = 0.5 * (X + X.transpose());
    const double res = are_residual(prob, P);
    if (res < best_res) {
      best_res = res;
      best_P = P;
    } else {
      break;
    }
  }
  P = best_P;

  const double q_norm = std::max(1e-300, spectral_norm(Matrix(prob.Q)));
  if (!(best_res <= opts.residual_tol_rel * q_norm))
    fail(ErrorCode::NoConvergence, "ARE residual did not reach tolerance");

  StabilizedLoop loop;
  loop.Pinf = P;
  loop.residual = best_res;
  Eigen::LLT<Matrix> wllt(prob.W);
  loop.gain = wllt.solve(prob.B.transpose() * P);
  loop.Ainf = A - prob.B * loop.gain;

  Eigen::EigenSolver<Matrix> es(loop.Ainf);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::NoConvergence, "eigen decomposition of the closed loop failed");
  const double max_re = es.eigenvalues().real().maxCoeff();
  if (!(max_re < 0.0))
    fail(ErrorCode::NotStabilizing, "closed-loop generator is not Hurwitz");
  loop.mu_inf = -max_re;

  // Transient constant: sample |e^{Ainf t}| e^{mu t} on [0, 5/mu] through the
  // eigenbasis; fall back to fine CN stepping if the basis is ill-conditioned.
  const ComplexMatrix V = es.eigenvectors();
  Eigen::FullPivLU<ComplexMatrix> vlu(V);
  double m_inf = 1.0;
  const int samples = 60;
  const double t_max = 5.0 / loop.mu_inf;
  if (vlu.isInvertible()) {
    const ComplexMatrix Vinv = vlu.inverse();
    const Eigen::VectorXcd lambda = es.eigenvalues();
    for (int j = 1; j <= samples; ++j) {
      const double t = t_max * static_cast<double>(j) / samples;
      const ComplexMatrix E =
          V * (lambda.array() * t).exp().matrix().asDiagonal() * Vinv;
      m_inf = std::max(m_inf, spectral_norm(Matrix(E.real())) * std::exp(loop.mu_inf * t));
    }
  } else {
    const double dt_fine = t_max / (samples * 40.0);
    Matrix E = Matrix::Identity(n, n);
    const Matrix prop = cn_propagator(loop.Ainf.sparseView(), dt_fine);
    for (int j = 1; j <= samples * 40; ++j) {
      E = prop * E;
      if (j % 40 == 0) {
        const double t = dt_fine * j;
        m_inf = std::max(m_inf, spectral_norm(E) * std::exp(loop.mu_inf * t));
      }
    }
  }
  loop.M_inf = m_inf;
  return loop;
}

Matrix solve_are_rde_limit(const LqProblem& prob, double dt, int max_steps) {
  const int n = prob.n();
  if (max_steps <= 0) max_steps = 10 * n;
  const Matrix S = control_quadratic(prob);
  const Matrix Q = Matrix(prob.Q);
  RdeStepper stepper{&S, &Q};
  const SpMat& A = prob.A;

  Matrix P = Matrix::Zero(n, n);
  long substeps = 1;
  const long max_substeps = 1L << 24;
  int settled = 0;
  for (int step = 0; step < max_steps; ++step) {
    Matrix coarse = stepper.advance(P, &A, nullptr, dt, static_cast<int>(substeps));
    for (;;) {
      Matrix fine = stepper.advance(P, &A, nullptr, dt, static_cast<int>(4 * substeps));
      const bool ok = fine.allFinite();
      const double err = ok && coarse.allFinite() ? (coarse - fine).norm()
                                                  : std::numeric_limits<double>::infinity();
      if (ok && err <= 1e-11 * (1.0 + fine.norm())) {
        coarse = std::move(fine);
        break;
      }
      substeps *= 4;
      if (substeps > max_substeps)
        fail(ErrorCode::NoConvergence, "RDE-limit refinement exceeded the substep cap");
      coarse = ok ? std::move(fine) : stepper.advance(P, &A, nullptr, dt, static_cast<int>(substeps));
    }
    Matrix P_new = 0.5 * (coarse + coarse.transpose());
    if (!P_new.allFinite() || P_new.norm() > 1e12)
      fail(ErrorCode::RiccatiBlowup, "Riccati solution escaped the finite-norm guard");
    const double delta = (P_new - P).norm();
    P = std::move(P_new);
    if (delta <= 1e-10 * std::max(P.norm(), 1e-30)) {
      if (++settled >= 10) return P;
    } else {
      settled = 0;
    }
  }
  fail(ErrorCode::NoConvergence, "RDE limit did not settle within the configured horizon");
}

Vector feedback_control(const Matrix& P, const LqProblem& prob, const Vector& x) {
  Eigen::LLT<Matrix> wllt(prob.W);
  return -wllt.solve(prob.B.transpose() * (P * x));
}

}  // namespace rbmpc
