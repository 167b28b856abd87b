#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <vector>

#include "epflow/model.hpp"

namespace epflow::spectral {

using Eigen::VectorXd;

/// Tensor grid with Dirichlet boundary; unknowns are the interior nodes.
struct GridSpec {
  std::vector<std::array<double, 2>> box;  // [lo, hi] per dimension
  std::vector<int> n_per_dim;              // nodes per dimension, boundary included

  int dim() const { return static_cast<int>(box.size()); }
  double spacing(int d) const { return (box[d][1] - box[d][0]) / (n_per_dim[d] - 1); }
  long interior_count() const;
};

/// Box sized so that every critical point is at least 4 eigenfunction widths
/// from the boundary and the spacing resolves the narrowest width by a factor
/// of 6, width_j = sqrt(eps / lambda_min(X_j)). At least min_n nodes per
/// dimension.
GridSpec auto_grid(const model::DriftModel& m, double alpha, double eps, int min_n = 32);

/// Discretised eps Lap + <F, grad> - W0/eps - W1 with F = (1-2a) b,
/// W0 = |grad V|^2/4 - <b, grad V>/2 + a(1-a)|b|^2, W1 = -Lap V/2 + a div b.
/// Second-order central differences; Dirichlet rows eliminated.
struct DeformedOperator {
  double alpha;
  double eps;
  GridSpec grid;
  Eigen::SparseMatrix<double> entries;
  int negative_potential_nodes = 0;  // nodes with W0 < -1e-9 (warning count)
};

struct SpectralResult {
  double lambda;     // leading eigenvalue, the finite-eps e(alpha)
  VectorXd eigvec;   // interior nodes, entrywise > 0, normalised to max 1
  double residual;   // |A psi - lambda psi| / |psi|
  GridSpec grid;
  int iterations;
};

DeformedOperator assemble(const model::DriftModel& m, double alpha, double eps,
                          const GridSpec& grid);

/// max_j e_j(alpha) + 1, a point strictly right of the spectrum.
double semiclassical_shift(const model::DriftModel& m, double alpha);

/// Rightmost eigenpair by shift-inverted iteration from a strictly positive
/// start vector. Throws NoConvergence past max_iter and SignFlip when the
/// converged vector is not single-signed.
SpectralResult leading_eigpair(const DeformedOperator& op, double shift, double tol = 1e-7,
                               int max_iter = 500);

struct SweepRow {
  double eps;
  double lambda;
  double residual;
  int n0;            // nodes along the first dimension
  double error;      // |lambda - max_j e_j(alpha)|
};

/// Eigenvalue versus the semiclassical prediction for each eps, with the grid
/// re-sized per eps by the auto_grid rule. eps_list must be sorted decreasing.
std::vector<SweepRow> e_eps_sweep(const model::DriftModel& m, double alpha,
                                  const std::vector<double>& eps_list, int min_n = 32);

struct FkInit {
  enum class Kind { Point, Mu0, Weights } kind = Kind::Point;
  VectorXd x0;       // Point: snapped to the nearest interior node
  VectorXd weights;  // Weights: one per interior node, normalised here
};

/// Finite-time MGF via Crank-Nicolson in the conjugated frame:
/// chi_t(a) = sum_nodes w g^-a e^{V/2eps} u(t), du/dt = A u,
/// u(0) = e^{-V/2eps} g^a. g must be strictly positive.
double fk_propagate(const model::DriftModel& m, double alpha, double eps, const GridSpec& grid,
                    const std::function<double(const VectorXd&)>& g, const FkInit& init,
                    double t, double dt = 1e-3);

}  // namespace epflow::spectral
