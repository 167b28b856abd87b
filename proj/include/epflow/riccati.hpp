#pragma once

#include <Eigen/Dense>

namespace epflow::riccati {

using Eigen::MatrixXd;

/// Quadratic data (D2V, Db) of a critical point. C is symmetrised on
/// construction; det C must be nonzero.
struct LocalLinearization {
  MatrixXd C;
  MatrixXd Bm;

  LocalLinearization(MatrixXd c, MatrixXd bm);
};

/// Coefficients of the algebraic Riccati equation
///   X^2 - B'X/2 - XB/2 - K = 0
/// with B = (1-2a) Bm and K = C^2/4 - (Bm'C + C Bm)/4 + a(1-a) Bm'Bm.
struct AreCoefficients {
  MatrixXd B_alpha;
  MatrixXd K_alpha;
  double alpha;
};

/// Maximal symmetric solution with its certificates: the Frobenius residual
/// of the equation and the stability margin of -X + B/2 (negative iff the
/// solution is maximal).
struct AreSolution {
  MatrixXd X;
  double residual;
  double stability_margin;
};

AreCoefficients build_coeffs(const LocalLinearization& lin, double alpha);

/// Block matrix [[-B/2, I], [K, B'/2]]. Columns [v; Xv] span an invariant
/// subspace with restriction X - B/2; the maximal solution corresponds to the
/// anti-stable N-dimensional subspace.
MatrixXd hamiltonian(const AreCoefficients& coeffs);

/// Solves via the anti-stable invariant subspace of the Hamiltonian, then
/// polishes with Newton steps (each one a small Lyapunov solve). Throws
/// SpectralSplitFailure when an eigenvalue sits within 1e-10 of the imaginary
/// axis and SingularBasis when the subspace basis is ill-conditioned.
AreSolution solve_are(const AreCoefficients& coeffs);

/// e_j(a) = -tr X + tr C / 2 - a tr Bm.
double leading_eig_linear(const LocalLinearization& lin, double alpha);

/// tr X recovered from Hamiltonian eigenvalues alone:
/// tr X = -(tr B - sum |Re lambda|) / 2. Cross-check for solve_are.
double trace_via_hamiltonian(const AreCoefficients& coeffs);

}  // namespace epflow::riccati
