#include "epflow/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "epflow/errors.hpp"
#include "epflow/ratefn.hpp"
#include "epflow/riccati.hpp"

namespace epflow::spectral {

using Eigen::SparseMatrix;
using Eigen::Triplet;

long GridSpec::interior_count() const {
  long c = 1;
  for (int d = 0; d < dim(); ++d) c *= n_per_dim[d] - 2;
  return c;
}

namespace {

// Eigenfunction widths sqrt(eps / lambda_min(X_j)) per critical point.
std::vector<double> eigenfunction_widths(const std::vector<model::CriticalPoint>& points,
                                         double alpha, double eps) {
  std::vector<double> widths;
  widths.reserve(points.size());
  for (const auto& cp : points) {
    riccati::LocalLinearization lin(cp.hess, cp.jac);
    auto sol = riccati::solve_are(riccati::build_coeffs(lin, alpha));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.X);
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmin > 0.0)) throw NumericalError("ARE solution not positive definite for grid sizing");
    widths.push_back(std::sqrt(eps / lmin));
  }
  return widths;
}

struct NodeWalker {
  const GridSpec& grid;
  std::vector<int> idx;  // interior multi-index, 1-based within the full grid

  explicit NodeWalker(const GridSpec& g) : grid(g), idx(g.dim(), 1) {}

  VectorXd position() const {
    VectorXd x(grid.dim());
    for (int d = 0; d < grid.dim(); ++d) x[d] = grid.box[d][0] + idx[d] * grid.spacing(d);
    return x;
  }
  bool advance() {
    for (int d = 0; d < grid.dim(); ++d) {
      if (++idx[d] <= grid.n_per_dim[d] - 2) return true;
      idx[d] = 1;
    }
    return false;
  }
};

long linear_index(const GridSpec& grid, const std::vector<int>& idx) {
  long li = 0;
  long stride = 1;
  for (int d = 0; d < grid.dim(); ++d) {
    li += (idx[d] - 1) * stride;
    stride *= grid.n_per_dim[d] - 2;
  }
  return li;
}

}  // namespace

GridSpec auto_grid(const model::DriftModel& m, double alpha, double eps, int min_n) {
  auto points = model::find_critical_points(m, model::SeedGrid{m.check_radius, 11});
  if (points.empty()) throw NumericalError("auto_grid: no critical points found");
  auto widths = eigenfunction_widths(points, alpha, eps);
  const double wmax = *std::max_element(widths.begin(), widths.end());
  const double wmin = *std::min_element(widths.begin(), widths.end());
  const double margin = 4.0 * wmax;
  const double h_req = wmin / 6.0;

  GridSpec g;
  g.box.resize(m.dim);
  g.n_per_dim.resize(m.dim);
  for (int d = 0; d < m.dim; ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& cp : points) {
      lo = std::min(lo, cp.location[d]);
      hi = std::max(hi, cp.location[d]);
    }
    g.box[d] = {lo - margin, hi + margin};
    const int n = static_cast<int>(std::ceil((g.box[d][1] - g.box[d][0]) / h_req)) + 1;
    g.n_per_dim[d] = std::max(min_n, n);
  }
  return g;
}

DeformedOperator assemble(const model::DriftModel& m, double alpha, double eps,
                          const GridSpec& grid) {
  if (grid.dim() != m.dim) throw InvalidParams("assemble: grid dimension mismatch");
  if (m.dim > 3) throw InvalidParams("assemble: the grid route supports dimension 2 or 3");
  if (m.dim == 3)
    std::fprintf(stderr, "# warning: 3-dimensional grid; dense eigenvector storage is %ld nodes\n",
                 grid.interior_count());
  for (int d = 0; d < grid.dim(); ++d)
    if (grid.n_per_dim[d] < 32) throw InvalidParams("assemble: fewer than 32 nodes per dimension");

  // grid spacing must resolve the narrowest eigenfunction
  {
    auto points = model::find_critical_points(m, model::SeedGrid{m.check_radius, 11});
    if (!points.empty()) {
      auto widths = eigenfunction_widths(points, alpha, eps);
      const double wmin = *std::min_element(widths.begin(), widths.end());
      for (int d = 0; d < grid.dim(); ++d)
        if (grid.spacing(d) > wmin / 6.0 * 1.0000001)
          throw GridTooCoarse("grid spacing " + std::to_string(grid.spacing(d)) +
                              " exceeds eigenfunction width / 6 = " + std::to_string(wmin / 6.0));
    }
  }

  const long n = grid.interior_count();
  DeformedOperator op;
  op.alpha = alpha;
  op.eps = eps;
  op.grid = grid;
  op.entries.resize(n, n);

  std::vector<Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(n) * (2 * grid.dim() + 1));

  NodeWalker walker(grid);
  int negative_nodes = 0;
  do {
    const long row = linear_index(grid, walker.idx);
    const VectorXd x = walker.position();
    const VectorXd gv = m.grad_V(x);
    const VectorXd bv = m.b(x);
    const double w0 = 0.25 * gv.squaredNorm() - 0.5 * bv.dot(gv) +
                      alpha * (1.0 - alpha) * bv.squaredNorm();
    const double w1 = -0.5 * m.hess_V(x).trace() + alpha * m.div_b(x);
    if (w0 < -1e-9) ++negative_nodes;

    double diag = -(w0 / eps + w1);
    for (int d = 0; d < grid.dim(); ++d) {
      const double h = grid.spacing(d);
      const double f_d = (1.0 - 2.0 * alpha) * bv[d];
      diag -= 2.0 * eps / (h * h);
      if (walker.idx[d] + 1 <= grid.n_per_dim[d] - 2) {
        auto up = walker.idx;
        ++up[d];
        trips.emplace_back(row, linear_index(grid, up), eps / (h * h) + f_d / (2.0 * h));
      }
      if (walker.idx[d] - 1 >= 1) {
        auto dn = walker.idx;
        --dn[d];
        trips.emplace_back(row, linear_index(grid, dn), eps / (h * h) - f_d / (2.0 * h));
      }
    }
    trips.emplace_back(row, row, diag);
  } while (walker.advance());

  op.entries.setFromTriplets(trips.begin(), trips.end());
  op.negative_potential_nodes = negative_nodes;
  if (negative_nodes > 0)
    std::fprintf(stderr, "# warning: W0 < -1e-9 at %d grid nodes (alpha outside the estimate?)\n",
                 negative_nodes);
  return op;
}

double semiclassical_shift(const model::DriftModel& m, double alpha) {
  auto points = model::find_critical_points(m, model::SeedGrid{m.check_radius, 11});
  if (points.empty()) throw NumericalError("semiclassical_shift: no critical points");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& cp : points) {
    riccati::LocalLinearization lin(cp.hess, cp.jac);
    best = std::max(best, riccati::leading_eig_linear(lin, alpha));
  }
  return best + 1.0;
}

SpectralResult leading_eigpair(const DeformedOperator& op, double shift, double tol,
                               int max_iter) {
  const long n = op.entries.rows();
  SparseMatrix<double> M = -op.entries;
  for (long i = 0; i < n; ++i) M.coeffRef(i, i) += shift;

  Eigen::SparseLU<SparseMatrix<double>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success)
    throw NumericalError("leading_eigpair: factorisation of the shifted operator failed");

  VectorXd v = VectorXd::Ones(n);
  v /= v.norm();
  double lambda = 0.0, residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iter; ++it) {
    VectorXd w = lu.solve(v);
    const double nrm = w.norm();
    if (!(nrm > 0.0) || !w.allFinite())
      throw NumericalError("leading_eigpair: breakdown in the inverse iteration");
    v = w / nrm;
    const VectorXd av = shift * v - M * v;
    lambda = v.dot(av);
    residual = (av - lambda * v).norm();
    if (residual <= tol) break;
  }
  if (residual > tol)
    throw NoConvergence("leading_eigpair: residual " + std::to_string(residual) + " after " +
                        std::to_string(max_iter) + " iterations");

  // Perron mode is single-signed; a mixed-sign vector means a subdominant
  // mode was captured (box too small or shift misplaced).
  long imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) v = -v;
  if (v.minCoeff() <= 0.0)
    throw SignFlip("leading_eigpair: converged vector is not single-signed");

  SpectralResult res;
  res.lambda = lambda;
  res.eigvec = v / v.maxCoeff();
  res.residual = residual;
  res.grid = op.grid;
  res.iterations = it + 1;
  return res;
}

std::vector<SweepRow> e_eps_sweep(const model::DriftModel& m, double alpha,
                                  const std::vector<double>& eps_list, int min_n) {
  if (eps_list.empty()) throw InvalidParams("e_eps_sweep: empty eps list");
  for (size_t i = 1; i < eps_list.size(); ++i)
    if (eps_list[i] >= eps_list[i - 1])
      throw InvalidParams("e_eps_sweep: eps list must be sorted decreasing");

  const double target = semiclassical_shift(m, alpha) - 1.0;
  std::vector<SweepRow> rows;
  for (double eps : eps_list) {
    GridSpec grid = auto_grid(m, alpha, eps, min_n);
    DeformedOperator op = assemble(m, alpha, eps, grid);
    SpectralResult r = leading_eigpair(op, target + 1.0);
    rows.push_back({eps, r.lambda, r.residual, grid.n_per_dim[0], std::abs(r.lambda - target)});
  }
  return rows;
}

double fk_propagate(const model::DriftModel& m, double alpha, double eps, const GridSpec& grid,
                    const std::function<double(const VectorXd&)>& g, const FkInit& init,
                    double t, double dt) {
  if (!(t >= 0.0) || !(dt > 0.0)) throw InvalidParams("fk_propagate: bad time parameters");
  if (dt > 1e-2)
    std::fprintf(stderr, "# warning: fk_propagate dt = %g > 1e-2; accuracy advisory only\n", dt);

  DeformedOperator op = assemble(m, alpha, eps, grid);
  const long n = op.entries.rows();

  VectorXd vpot(n), gval(n);
  {
    NodeWalker walker(grid);
    do {
      const long i = linear_index(grid, walker.idx);
      const VectorXd x = walker.position();
      vpot[i] = m.V(x);
      const double gx = g ? g(x) : 1.0;
      if (!(gx > 0.0)) throw InvalidParams("fk_propagate: g must be strictly positive");
      gval[i] = gx;
    } while (walker.advance());
  }

  VectorXd weights = VectorXd::Zero(n);
  switch (init.kind) {
    case FkInit::Kind::Point: {
      if (init.x0.size() != grid.dim()) throw InvalidParams("fk_propagate: bad init point");
      std::vector<int> idx(grid.dim());
      for (int d = 0; d < grid.dim(); ++d) {
        int k = static_cast<int>(std::lround((init.x0[d] - grid.box[d][0]) / grid.spacing(d)));
        idx[d] = std::clamp(k, 1, grid.n_per_dim[d] - 2);
      }
      weights[linear_index(grid, idx)] = 1.0;
      break;
    }
    case FkInit::Kind::Mu0: {
      if (!m.quadratic)
        throw InvalidParams("fk_propagate: mu0 initial data requires a quadratic V");
      for (long i = 0; i < n; ++i) weights[i] = std::exp(-vpot[i] / eps);
      weights /= weights.sum();
      break;
    }
    case FkInit::Kind::Weights: {
      if (init.weights.size() != n)
        throw InvalidParams("fk_propagate: weight vector size mismatch");
      weights = init.weights;
      const double s = weights.sum();
      if (!(s > 0.0)) throw InvalidParams("fk_propagate: weights must have positive mass");
      weights /= s;
      break;
    }
  }

  // conjugated frame: u(0) = e^{-V/2eps} g^alpha, du/dt = A u
  VectorXd u(n);
  for (long i = 0; i < n; ++i) u[i] = std::exp(-vpot[i] / (2.0 * eps)) * std::pow(gval[i], alpha);

  const long steps = std::lround(t / dt);
  if (steps > 0) {
    SparseMatrix<double> eye(n, n);
    eye.setIdentity();
    SparseMatrix<double> lhs = eye - (dt / 2.0) * op.entries;
    SparseMatrix<double> rhs = eye + (dt / 2.0) * op.entries;
    Eigen::SparseLU<SparseMatrix<double>> lu;
    lu.compute(lhs);
    if (lu.info() != Eigen::Success)
      throw NumericalError("fk_propagate: Crank-Nicolson factorisation failed");
    for (long k = 0; k < steps; ++k) {
      u = lu.solve(rhs * u);
      const double floor_tol = -1e-13 * u.cwiseAbs().maxCoeff();
      if (u.minCoeff() < floor_tol)
        throw PositivityLoss("fk_propagate: evolved field went negative at step " +
                             std::to_string(k + 1) + "; reduce dt");
    }
  }

  double chi = 0.0;
  for (long i = 0; i < n; ++i) {
    if (weights[i] == 0.0) continue;
    chi += weights[i] * std::pow(gval[i], -alpha) * std::exp(vpot[i] / (2.0 * eps)) * u[i];
  }
  return chi;
}

}  // namespace epflow::spectral
