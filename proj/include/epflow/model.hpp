#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace epflow::model {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Evaluable bundle (V, grad V, hess V, b, Db, div b) for the diffusion
/// dX = (-grad V + b) dt + sqrt(2 eps) dW. Immutable after construction and
/// safe to share across threads; all evaluators are pure.
struct DriftModel {
  int dim = 0;
  std::function<double(const VectorXd&)> V;
  std::function<VectorXd(const VectorXd&)> grad_V;
  std::function<MatrixXd(const VectorXd&)> hess_V;
  std::function<VectorXd(const VectorXd&)> b;
  std::function<MatrixXd(const VectorXd&)> jac_b;
  std::function<double(const VectorXd&)> div_b;
  double check_radius = 3.0;   // sampling ball radius for assumption checks
  bool quadratic = false;      // V exactly quadratic (enables mu0 initial data)
  std::string name;
};

enum class CriticalKind { LocalMin, Saddle, LocalMax };

const char* kind_name(CriticalKind k);

/// A nondegenerate root of grad V together with its local linearisation data.
struct CriticalPoint {
  VectorXd location;
  MatrixXd hess;      // D2V at the root
  MatrixXd jac;       // Db at the root
  CriticalKind kind;  // from the Hessian signature
  double b_norm;      // |b| at the root, diagnostic
};

/// Sampled (not proven) worst-case ratios behind the standing assumptions.
struct AssumptionReport {
  double k_b_hat = 0.0;   // sampled sup of <b, grad V> / |grad V|^2, clamped at 0
  double h_b_hat = 0.0;   // sampled sup of |b|^2 / |grad V|^2
  double K_b = 0.0;       // smallest nonnegative constant making the sampled margin >= 0
  double l1_margin = 0.0; // sampled inf of <grad V - b, x> - |x|^2 + K_b
  int n_samples = 0;
  bool pass_rb = false;   // k_b_hat < 1/2
};

struct SeedGrid {
  double radius = 3.0;
  int points_per_dim = 11;
};

/// Newton iteration on grad V = 0 from every seed; converged roots are
/// deduplicated within 1e-6 and classified by Hessian signature. Seeds that
/// fail to converge are discarded and counted in *discarded.
std::vector<CriticalPoint> find_critical_points(const DriftModel& m, const SeedGrid& seeds,
                                                int* discarded = nullptr);

/// Uniform samples in the check ball, excluding 1e-3 neighbourhoods of the
/// critical points where the ratios are 0/0. Can refute the assumptions but
/// not prove them.
AssumptionReport check_assumptions(const DriftModel& m, int n_samples, std::uint64_t rng_seed);

// Builtins. All evaluators are analytically exact.

/// V(x) = <x, C x>/2, b(x) = Bm x. C must be symmetric positive definite.
DriftModel make_linear(const MatrixXd& C, const MatrixXd& Bm, double check_radius = 3.0);

/// V(x) = |x|^2/2, b(x) = omega J x with J the 2x2 rotation generator.
DriftModel make_rotation(double omega, double check_radius = 3.0);

/// V(x) = (x1^2-1)^2/4 + x2^2/2, b(x) = omega (1 + beta x1) J grad V(x),
/// smoothly tapered to zero over [taper_radius, 2 taper_radius]. The taper
/// radius exceeds every simulation and grid box used here.
DriftModel make_twowell(double omega, double beta, double check_radius = 3.0,
                        double taper_radius = 50.0);

}  // namespace epflow::model
