#include "epflow/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>

#include "epflow/errors.hpp"

namespace epflow::riccati {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;

LocalLinearization::LocalLinearization(MatrixXd c, MatrixXd bm)
    : C((c + c.transpose()) / 2.0), Bm(std::move(bm)) {
  if (C.rows() != C.cols() || Bm.rows() != Bm.cols() || C.rows() != Bm.rows())
    throw InvalidParams("linearization: C and Bm must be square of equal size");
  if (std::abs(C.determinant()) < 1e-12)
    throw DegenerateCritical("linearization: det C vanishes");
}

AreCoefficients build_coeffs(const LocalLinearization& lin, double alpha) {
  const MatrixXd& C = lin.C;
  const MatrixXd& Bm = lin.Bm;
  AreCoefficients out;
  out.alpha = alpha;
  out.B_alpha = (1.0 - 2.0 * alpha) * Bm;
  MatrixXd K = 0.25 * C * C - 0.25 * (Bm.transpose() * C + C * Bm) +
               alpha * (1.0 - alpha) * Bm.transpose() * Bm;
  out.K_alpha = (K + K.transpose()) / 2.0;
  return out;
}

MatrixXd hamiltonian(const AreCoefficients& coeffs) {
  const long n = coeffs.B_alpha.rows();
  MatrixXd H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = -0.5 * coeffs.B_alpha;
  H.topRightCorner(n, n) = MatrixXd::Identity(n, n);
  H.bottomLeftCorner(n, n) = coeffs.K_alpha;
  H.bottomRightCorner(n, n) = 0.5 * coeffs.B_alpha.transpose();
  return H;
}

namespace {

MatrixXd riccati_residual(const MatrixXd& X, const MatrixXd& B, const MatrixXd& K) {
  return X * X - 0.5 * B.transpose() * X - 0.5 * X * B - K;
}

// Solve A'D + DA = -R by vectorisation. A is anti-stable near the maximal
// solution, so the equation is uniquely solvable at the sizes used here.
MatrixXd lyapunov_solve(const MatrixXd& A, const MatrixXd& R) {
  const long n = A.rows();
  MatrixXd M = MatrixXd::Zero(n * n, n * n);
  const MatrixXd I = MatrixXd::Identity(n, n);
  // vec(A'D) = (I kron A') vec(D); vec(D A) = (A' kron I) vec(D)
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      for (long k = 0; k < n; ++k) {
        M(i * n + j, i * n + k) += A(k, j);  // A' D
        M(i * n + j, k * n + j) += A(k, i);  // D A
      }
  Eigen::VectorXd rhs(n * n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) rhs[i * n + j] = -R(i, j);
  Eigen::VectorXd d = M.fullPivLu().solve(rhs);
  MatrixXd D(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) D(i, j) = d[i * n + j];
  return D;
}

}  // namespace

AreSolution solve_are(const AreCoefficients& coeffs) {
  const long n = coeffs.B_alpha.rows();
  const MatrixXd H = hamiltonian(coeffs);

  Eigen::EigenSolver<MatrixXd> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("Hamiltonian eigensolve failed");
  const VectorXcd lam = es.eigenvalues();
  for (long i = 0; i < 2 * n; ++i)
    if (std::abs(lam[i].real()) < 1e-10)
      throw SpectralSplitFailure("Hamiltonian eigenvalue within 1e-10 of the imaginary axis");

  MatrixXcd U(2 * n, n);
  long k = 0;
  for (long i = 0; i < 2 * n; ++i) {
    if (lam[i].real() > 0.0) {
      if (k == n) throw SpectralSplitFailure("more than N anti-stable eigenvalues");
      U.col(k++) = es.eigenvectors().col(i);
    }
  }
  if (k != n) throw SpectralSplitFailure("fewer than N anti-stable eigenvalues");

  const MatrixXcd U1 = U.topRows(n);
  const MatrixXcd U2 = U.bottomRows(n);
  Eigen::JacobiSVD<MatrixXcd> svd(U1);
  const double smin = svd.singularValues()(n - 1);
  if (smin <= 0.0 || svd.singularValues()(0) / smin > 1e12)
    throw SingularBasis("anti-stable graph basis has condition number above 1e12");

  MatrixXcd Xc = U2 * U1.partialPivLu().solve(MatrixXcd::Identity(n, n));
  MatrixXd X = Xc.real();
  if ((X - X.transpose()).norm() > 1e-8)
    throw AsymmetricSolution("graph-subspace solution asymmetric beyond 1e-8");
  X = ((X + X.transpose()) / 2.0).eval();

  // Newton polish: each step solves a Lyapunov equation in the anti-stable
  // closed-loop matrix X - B/2.
  const MatrixXd& B = coeffs.B_alpha;
  const MatrixXd& K = coeffs.K_alpha;
  for (int it = 0; it < 20; ++it) {
    MatrixXd R = riccati_residual(X, B, K);
    if (R.norm() <= 1e-13) break;
    MatrixXd A = X - 0.5 * B;
    MatrixXd D = lyapunov_solve(A, R);
    if (!D.allFinite()) break;
    MatrixXd Xn = X + D;
    Xn = ((Xn + Xn.transpose()) / 2.0).eval();
    if (riccati_residual(Xn, B, K).norm() >= R.norm()) break;
    X = Xn;
  }

  AreSolution sol;
  sol.X = X;
  sol.residual = riccati_residual(X, B, K).norm();
  Eigen::EigenSolver<MatrixXd> cls(-X + 0.5 * B);
  sol.stability_margin = cls.eigenvalues().real().maxCoeff();
  return sol;
}

double leading_eig_linear(const LocalLinearization& lin, double alpha) {
  AreCoefficients coeffs = build_coeffs(lin, alpha);
  AreSolution sol = solve_are(coeffs);
  return -sol.X.trace() + 0.5 * lin.C.trace() - alpha * lin.Bm.trace();
}

double trace_via_hamiltonian(const AreCoefficients& coeffs) {
  const MatrixXd H = hamiltonian(coeffs);
  Eigen::EigenSolver<MatrixXd> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("Hamiltonian eigensolve failed");
  const VectorXcd lam = es.eigenvalues();
  double sum_abs_re = 0.0;
  for (long i = 0; i < lam.size(); ++i) {
    if (std::abs(lam[i].real()) < 1e-10)
      throw SpectralSplitFailure("Hamiltonian eigenvalue within 1e-10 of the imaginary axis");
    sum_abs_re += std::abs(lam[i].real());
  }
  // The anti-stable half of the spectrum consists of the eigenvalues of
  // X - B/2, so sum |Re lambda| = 2 tr X - tr B. (The sign of the tr B term
  // is fixed by the B = aI, K = (1/4 - a/2)I instance, where X = I/2.)
  return 0.5 * (sum_abs_re + coeffs.B_alpha.trace());
}

}  // namespace epflow::riccati
