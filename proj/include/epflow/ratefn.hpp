#pragma once

#include <optional>
#include <vector>

#include "epflow/model.hpp"
#include "epflow/riccati.hpp"

namespace epflow::ratefn {

struct Interval {
  double lo;
  double hi;
  double width() const { return hi - lo; }
};

/// Sampled e(a) = max_j e_j(a) over all critical points, with the per-point
/// curves kept for the convex-hull cross-check.
struct CgfCurve {
  std::vector<double> alphas;
  std::vector<double> values;
  std::vector<int> argmax_index;
  std::vector<std::vector<double>> per_point_curves;  // [j][k]
};

struct RateFunction {
  std::vector<double> sigmas;
  std::vector<double> values;
  Interval domain;  // closure of {-De(a)} over the computed grid
  std::optional<Interval> flat_interval;
};

struct AdmissibilityQuery {
  double k_b;
  double h_b;
  double alpha;
  double p;
};

struct Raster {
  std::vector<double> alphas;
  std::vector<double> ps;
  std::vector<bool> mask;  // row-major over (alpha, p)
  bool at(int i, int j) const { return mask[static_cast<size_t>(i) * ps.size() + j]; }
};

/// Outer estimate of the admissible interval from the sampled (RB) constants:
/// (1/2 - r, 1/2 + r) with r = sqrt(1 + (1-2 k_b)/h_b)/2. Throws
/// InvalidConstants for k_b >= 1/2. h_b = 0 yields the whole line.
Interval alpha_interval(double k_b, double h_b);

/// n-point grid (n odd) symmetric about 1/2 inside the open interval, with
/// the spacing snapped so that 0, 1/2 and 1 are grid points whenever the
/// interval allows it. The interval is intersected with [-1, 2] first.
std::vector<double> default_alpha_grid(const Interval& admissible, int n = 201);

CgfCurve semiclassical_cgf(const std::vector<model::CriticalPoint>& points,
                           const std::vector<double>& alphas);
CgfCurve semiclassical_cgf(const model::DriftModel& m, const std::vector<double>& alphas);

/// Legendre transform by exhaustive grid scan; sigma values outside the
/// derivative range of the curve are dropped. Throws NonConvexInput when the
/// curve's second differences dip below -1e-6.
RateFunction legendre(const CgfCurve& curve, const std::vector<double>& sigma_grid);

/// Union of the negated chord slopes of the curve (the exact supporting
/// slopes of the grid transform), their reflections about 0, and a uniform
/// fill, all within the derivative range.
std::vector<double> default_sigma_grid(const CgfCurve& curve, int n_fill = 201);

/// m_j = -De_j(0) by Richardson-extrapolated central differences. Requires a
/// local minimum (C positive definite).
double mean_ep_local(const riccati::LocalLinearization& lin);

/// [min, max] of m_j over local minima; nullopt when they agree within 1e-9.
/// Throws NoLocalMinima when the model has none.
std::optional<Interval> flat_interval(const std::vector<model::CriticalPoint>& points);
std::optional<Interval> flat_interval(const model::DriftModel& m);

/// max |e(a) - e(1-a)| over the grid (reflected points looked up exactly when
/// present, interpolated otherwise).
double gc_defect(const CgfCurve& curve);

/// max |e*(s) - e*(-s) + s| over sigma with both signs inside the domain.
double rate_gc_defect(const RateFunction& rf);

/// Deviation between legendre(curve) and the lower convex envelope of the
/// pointwise min of the per-point transforms.
double convex_hull_check(const CgfCurve& curve, const std::vector<double>& sigma_grid);

/// Sufficient admissibility condition for the pair (alpha, p), transcribed
/// exactly: 1 - 2a + ap >= 0 and, depending on the sign of a(1-a), either
/// 1 - 1/p - (1-2a+ap) k_b > 0 or 1 - 1/p - (1-2a+ap) k_b - p a(a-1) h_b > 0.
bool admissible_pair(const AdmissibilityQuery& q);

Raster region_raster(double k_b, double h_b, const Interval& alpha_range,
                     const Interval& p_range, int resolution);

}  // namespace epflow::ratefn
