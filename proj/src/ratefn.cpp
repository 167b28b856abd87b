#include "epflow/ratefn.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "epflow/errors.hpp"

namespace epflow::ratefn {

Interval alpha_interval(double k_b, double h_b) {
  if (!(k_b < 0.5)) throw InvalidConstants("alpha_interval requires k_b < 1/2");
  if (h_b < 0.0) throw InvalidConstants("alpha_interval requires h_b >= 0");
  if (h_b == 0.0)
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  const double r = 0.5 * std::sqrt(1.0 + (1.0 - 2.0 * k_b) / h_b);
  return {0.5 - r, 0.5 + r};
}

std::vector<double> default_alpha_grid(const Interval& admissible, int n) {
  if (n < 3) n = 3;
  if (n % 2 == 0) ++n;
  const double lo = std::max(admissible.lo, -1.0);
  const double hi = std::min(admissible.hi, 2.0);
  double r = std::min(0.5 - lo, hi - 0.5);
  if (!(r > 0.0)) throw InvalidConstants("admissible interval does not contain 1/2");
  r *= 1.0 - 1e-3;  // stay strictly inside the open interval

  const int half = (n - 1) / 2;
  std::vector<double> grid(n);
  // Snap the spacing to 0.5/m so that 0, 1/2 and 1 land on grid points.
  const int m = static_cast<int>(std::ceil(half / (2.0 * r)));
  if (m <= half) {
    const double step = 0.5 / m;
    for (int k = -half; k <= half; ++k) grid[k + half] = k == 0 ? 0.5 : 0.5 + k * step;
    grid[half - m] = 0.0;
    grid[half + m] = 1.0;
  } else {
    const double step = r / half;
    for (int k = -half; k <= half; ++k) grid[k + half] = 0.5 + k * step;
    grid[half] = 0.5;
  }
  return grid;
}

CgfCurve semiclassical_cgf(const std::vector<model::CriticalPoint>& points,
                           const std::vector<double>& alphas) {
  if (points.empty()) throw InvalidParams("semiclassical_cgf: no critical points");
  CgfCurve curve;
  curve.alphas = alphas;
  const size_t nj = points.size();
  const size_t nk = alphas.size();
  curve.per_point_curves.assign(nj, std::vector<double>(nk, 0.0));
  for (size_t j = 0; j < nj; ++j) {
    riccati::LocalLinearization lin(points[j].hess, points[j].jac);
    for (size_t k = 0; k < nk; ++k) {
      try {
        curve.per_point_curves[j][k] = riccati::leading_eig_linear(lin, alphas[k]);
      } catch (const SpectralSplitFailure& e) {
        throw SpectralSplitFailure("critical point " + std::to_string(j) + " at alpha = " +
                                   std::to_string(alphas[k]) + ": " + e.what());
      } catch (const SingularBasis& e) {
        throw SingularBasis("critical point " + std::to_string(j) + " at alpha = " +
                            std::to_string(alphas[k]) + ": " + e.what());
      }
    }
  }
  curve.values.resize(nk);
  curve.argmax_index.resize(nk);
  for (size_t k = 0; k < nk; ++k) {
    int arg = 0;
    double best = curve.per_point_curves[0][k];
    for (size_t j = 1; j < nj; ++j) {
      if (curve.per_point_curves[j][k] > best) {
        best = curve.per_point_curves[j][k];
        arg = static_cast<int>(j);
      }
    }
    curve.values[k] = best;
    curve.argmax_index[k] = arg;
  }
  return curve;
}

CgfCurve semiclassical_cgf(const model::DriftModel& m, const std::vector<double>& alphas) {
  auto points = model::find_critical_points(m, model::SeedGrid{m.check_radius, 11});
  return semiclassical_cgf(points, alphas);
}

namespace {

void require_convex(const CgfCurve& curve, double tol) {
  for (size_t k = 1; k + 1 < curve.values.size(); ++k) {
    const double d2 = curve.values[k + 1] - 2.0 * curve.values[k] + curve.values[k - 1];
    if (d2 < -tol)
      throw NonConvexInput("cgf curve violates convexity at alpha = " +
                           std::to_string(curve.alphas[k]));
  }
}

Interval derivative_range(const CgfCurve& curve) {
  const auto& a = curve.alphas;
  const auto& e = curve.values;
  const size_t n = a.size();
  const double first = (e[1] - e[0]) / (a[1] - a[0]);
  const double last = (e[n - 1] - e[n - 2]) / (a[n - 1] - a[n - 2]);
  return {-last, -first};
}

double scan(const std::vector<double>& alphas, const std::vector<double>& e, double sigma) {
  double best = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < alphas.size(); ++k) best = std::max(best, -alphas[k] * sigma - e[k]);
  return best;
}

}  // namespace

RateFunction legendre(const CgfCurve& curve, const std::vector<double>& sigma_grid) {
  if (curve.alphas.size() < 3) throw InvalidParams("legendre: need at least 3 grid points");
  require_convex(curve, 1e-6);
  RateFunction rf;
  rf.domain = derivative_range(curve);
  const double slack = 1e-12 * (1.0 + std::abs(rf.domain.lo) + std::abs(rf.domain.hi));
  for (double s : sigma_grid)
    if (s >= rf.domain.lo - slack && s <= rf.domain.hi + slack) rf.sigmas.push_back(s);
  std::sort(rf.sigmas.begin(), rf.sigmas.end());
  rf.values.reserve(rf.sigmas.size());
  for (double s : rf.sigmas) rf.values.push_back(scan(curve.alphas, curve.values, s));
  return rf;
}

std::vector<double> default_sigma_grid(const CgfCurve& curve, int n_fill) {
  const Interval dom = derivative_range(curve);
  std::vector<double> out;
  const auto& a = curve.alphas;
  const size_t n = a.size();
  // supporting slopes of the combined curve and of every per-point curve;
  // the latter anchor the convex envelope at the flat-piece endpoints
  std::vector<const std::vector<double>*> sources;
  sources.push_back(&curve.values);
  for (const auto& pc : curve.per_point_curves) sources.push_back(&pc);
  for (const auto* src : sources) {
    const auto& e = *src;
    for (size_t k = 1; k + 1 < n; ++k)
      out.push_back(-(e[k + 1] - e[k - 1]) / (a[k + 1] - a[k - 1]));
  }
  out.push_back(dom.lo);
  out.push_back(dom.hi);
  const size_t base = out.size();
  for (size_t i = 0; i < base; ++i) out.push_back(-out[i]);
  for (int i = 0; i < n_fill; ++i)
    out.push_back(dom.lo + (dom.hi - dom.lo) * i / std::max(1, n_fill - 1));
  const double slack = 1e-12 * (1.0 + std::abs(dom.lo) + std::abs(dom.hi));
  std::erase_if(out, [&](double s) { return s < dom.lo - slack || s > dom.hi + slack; });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double x, double y) { return std::abs(x - y) <= 1e-13; }),
            out.end());
  return out;
}

double mean_ep_local(const riccati::LocalLinearization& lin) {
  Eigen::LLT<Eigen::MatrixXd> llt(lin.C);
  if (llt.info() != Eigen::Success)
    throw InvalidParams("mean_ep_local requires a local minimum (C positive definite)");
  const double h = 1e-5;
  auto e = [&](double a) { return riccati::leading_eig_linear(lin, a); };
  const double d1 = (e(h) - e(-h)) / (2.0 * h);
  const double d2 = (e(h / 2) - e(-h / 2)) / h;
  const double deriv = (4.0 * d2 - d1) / 3.0;
  const double m = -deriv;
  if (m < -1e-8)
    throw NumericalError("mean_ep_local returned a negative rate: " + std::to_string(m));
  return m;
}

std::optional<Interval> flat_interval(const std::vector<model::CriticalPoint>& points) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& cp : points) {
    if (cp.kind != model::CriticalKind::LocalMin) continue;
    any = true;
    const double m = mean_ep_local(riccati::LocalLinearization(cp.hess, cp.jac));
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  if (!any) throw NoLocalMinima("flat_interval: model has no local minima in the check ball");
  if (hi - lo <= 1e-9) return std::nullopt;
  return Interval{lo, hi};
}

std::optional<Interval> flat_interval(const model::DriftModel& m) {
  return flat_interval(model::find_critical_points(m, model::SeedGrid{m.check_radius, 11}));
}

double gc_defect(const CgfCurve& curve) {
  const auto& a = curve.alphas;
  const auto& e = curve.values;
  const size_t n = a.size();
  double defect = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const double target = 1.0 - a[k];
    double er;
    const size_t mirror = n - 1 - k;
    if (std::abs(a[mirror] - target) <= 1e-9) {
      er = e[mirror];
    } else if (target >= a.front() && target <= a.back()) {
      const auto it = std::lower_bound(a.begin(), a.end(), target);
      const size_t j = std::min(n - 1, static_cast<size_t>(it - a.begin()));
      if (j == 0) {
        er = e[0];
      } else {
        const double t = (target - a[j - 1]) / (a[j] - a[j - 1]);
        er = (1.0 - t) * e[j - 1] + t * e[j];
      }
    } else {
      continue;
    }
    defect = std::max(defect, std::abs(e[k] - er));
  }
  return defect;
}

double rate_gc_defect(const RateFunction& rf) {
  const auto& s = rf.sigmas;
  const auto& v = rf.values;
  const size_t n = s.size();
  double defect = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const double target = -s[k];
    if (target < s.front() || target > s.back()) continue;
    const auto it = std::lower_bound(s.begin(), s.end(), target);
    size_t j = static_cast<size_t>(it - s.begin());
    double er;
    if (j < n && std::abs(s[j] - target) <= 1e-12 * (1.0 + std::abs(target))) {
      er = v[j];
    } else if (j == 0 || j >= n) {
      continue;
    } else {
      const double t = (target - s[j - 1]) / (s[j] - s[j - 1]);
      er = (1.0 - t) * v[j - 1] + t * v[j];
    }
    defect = std::max(defect, std::abs(v[k] - er + s[k]));
  }
  return defect;
}

namespace {

// Lower convex envelope of points sorted by x; collinear points are kept so
// that already-convex data comes back untouched.
std::vector<size_t> lower_hull(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<size_t> hull;
  for (size_t i = 0; i < x.size(); ++i) {
    while (hull.size() >= 2) {
      const size_t a = hull[hull.size() - 2];
      const size_t b = hull[hull.size() - 1];
      const double cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
      if (cross < 0.0)
        hull.pop_back();  // middle point lies strictly above the chord
      else
        break;
    }
    hull.push_back(i);
  }
  return hull;
}

}  // namespace

double convex_hull_check(const CgfCurve& curve, const std::vector<double>& sigma_grid) {
  RateFunction ref = legendre(curve, sigma_grid);
  const size_t nj = curve.per_point_curves.size();

  std::vector<double> mins(ref.sigmas.size());
  for (size_t i = 0; i < ref.sigmas.size(); ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < nj; ++j)
      m = std::min(m, scan(curve.alphas, curve.per_point_curves[j], ref.sigmas[i]));
    mins[i] = m;
  }
  if (nj == 1) {
    double dev = 0.0;
    for (size_t i = 0; i < mins.size(); ++i) dev = std::max(dev, std::abs(mins[i] - ref.values[i]));
    return dev;
  }

  const auto hull = lower_hull(ref.sigmas, mins);
  double dev = 0.0;
  size_t seg = 0;
  for (size_t i = 0; i < ref.sigmas.size(); ++i) {
    while (seg + 1 < hull.size() && ref.sigmas[hull[seg + 1]] < ref.sigmas[i]) ++seg;
    double env;
    if (hull[seg] == i) {
      env = mins[i];
    } else {
      const size_t a = hull[seg];
      const size_t b = hull[std::min(seg + 1, hull.size() - 1)];
      if (a == b) {
        env = mins[a];
      } else {
        const double t = (ref.sigmas[i] - ref.sigmas[a]) / (ref.sigmas[b] - ref.sigmas[a]);
        env = (1.0 - t) * mins[a] + t * mins[b];
      }
    }
    dev = std::max(dev, std::abs(env - ref.values[i]));
  }
  return dev;
}

bool admissible_pair(const AdmissibilityQuery& q) {
  if (!(q.p > 1.0)) return false;
  const double c = 1.0 - 2.0 * q.alpha + q.alpha * q.p;
  if (c < 0.0) return false;
  const double base = 1.0 - 1.0 / q.p - c * q.k_b;
  if (q.alpha * (1.0 - q.alpha) >= 0.0) return base > 0.0;
  return base - q.p * q.alpha * (q.alpha - 1.0) * q.h_b > 0.0;
}

Raster region_raster(double k_b, double h_b, const Interval& alpha_range,
                     const Interval& p_range, int resolution) {
  if (resolution < 2) throw InvalidParams("region_raster: resolution must be at least 2");
  Raster r;
  r.alphas.resize(resolution);
  r.ps.resize(resolution);
  for (int i = 0; i < resolution; ++i) {
    r.alphas[i] = alpha_range.lo + (alpha_range.hi - alpha_range.lo) * i / (resolution - 1);
    r.ps[i] = p_range.lo + (p_range.hi - p_range.lo) * i / (resolution - 1);
  }
  r.mask.resize(static_cast<size_t>(resolution) * resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j)
      r.mask[static_cast<size_t>(i) * resolution + j] =
          admissible_pair({k_b, h_b, r.alphas[i], r.ps[j]});
  return r;
}

}  // namespace epflow::ratefn
