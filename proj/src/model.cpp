#include "epflow/model.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "epflow/errors.hpp"
#include "epflow/philox.hpp"

namespace epflow::model {

const char* kind_name(CriticalKind k) {
  switch (k) {
    case CriticalKind::LocalMin: return "min";
    case CriticalKind::Saddle: return "saddle";
    case CriticalKind::LocalMax: return "max";
  }
  return "?";
}

namespace {

// C^2 transition from 1 at u=0 to 0 at u=1 (quintic smoothstep complement).
double taper_value(double u) {
  if (u <= 0.0) return 1.0;
  if (u >= 1.0) return 0.0;
  return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double taper_deriv(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return -u * u * (30.0 + u * (-60.0 + 30.0 * u));
}

CriticalKind classify(const Eigen::MatrixXd& hess) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
  const auto& ev = es.eigenvalues();
  int neg = 0, pos = 0;
  for (int i = 0; i < ev.size(); ++i) (ev[i] < 0 ? neg : pos)++;
  if (neg == 0) return CriticalKind::LocalMin;
  if (pos == 0) return CriticalKind::LocalMax;
  return CriticalKind::Saddle;
}

}  // namespace

std::vector<CriticalPoint> find_critical_points(const DriftModel& m, const SeedGrid& seeds,
                                                int* discarded) {
  const int n = seeds.points_per_dim;
  const double R = seeds.radius;
  const int dim = m.dim;
  long total = 1;
  for (int d = 0; d < dim; ++d) total *= n;

  std::vector<CriticalPoint> found;
  int dropped = 0;
  VectorXd x(dim);
  for (long s = 0; s < total; ++s) {
    long rem = s;
    for (int d = 0; d < dim; ++d) {
      int idx = static_cast<int>(rem % n);
      rem /= n;
      x[d] = n == 1 ? 0.0 : -R + 2.0 * R * idx / (n - 1);
    }

    VectorXd y = x;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      VectorXd g = m.grad_V(y);
      if (g.norm() <= 1e-12) {
        ok = true;
        break;
      }
      Eigen::MatrixXd H = m.hess_V(y);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
      if (!lu.isInvertible()) break;
      VectorXd step = lu.solve(g);
      if (!step.allFinite() || step.norm() > 10.0 * R) break;
      y -= step;
      if (y.norm() > 5.0 * R) break;  // wandered far off the seed ball
    }
    if (!ok || m.grad_V(y).norm() > 1e-9) {
      ++dropped;
      continue;
    }

    bool dup = false;
    for (const auto& cp : found) {
      if ((cp.location - y).norm() < 1e-6) {
        dup = true;
        break;
      }
    }
    if (dup) continue;

    Eigen::MatrixXd H = m.hess_V(y);
    H = ((H + H.transpose()) / 2.0).eval();
    if (std::abs(H.determinant()) < 1e-10)
      throw DegenerateCritical("critical point with |det D2V| < 1e-10 at |x| = " +
                               std::to_string(y.norm()));
    CriticalPoint cp;
    cp.location = y;
    cp.hess = H;
    cp.jac = m.jac_b(y);
    cp.kind = classify(H);
    cp.b_norm = m.b(y).norm();
    found.push_back(std::move(cp));
  }
  if (discarded) *discarded = dropped;
  return found;
}

AssumptionReport check_assumptions(const DriftModel& m, int n_samples, std::uint64_t rng_seed) {
  const double R = m.check_radius;
  const int dim = m.dim;
  auto crits = find_critical_points(m, SeedGrid{R, 11});

  rng::Philox gen(rng_seed, 0);
  AssumptionReport rep;
  rep.n_samples = n_samples;
  double sup_kb = 0.0, sup_hb = 0.0;
  double sup_kb_const = 0.0;  // sup of |x|^2 - <grad V - b, x>
  VectorXd x(dim);
  int accepted = 0;
  while (accepted < n_samples) {
    for (int d = 0; d < dim; ++d) x[d] = R * (2.0 * gen.uniform() - 1.0);
    if (x.norm() > R) continue;
    bool near_crit = false;
    for (const auto& cp : crits) {
      if ((x - cp.location).norm() < 1e-3) {
        near_crit = true;
        break;
      }
    }
    if (near_crit) continue;
    ++accepted;

    VectorXd g = m.grad_V(x);
    VectorXd bx = m.b(x);
    double g2 = g.squaredNorm();
    if (g2 > 0.0) {
      sup_kb = std::max(sup_kb, bx.dot(g) / g2);
      sup_hb = std::max(sup_hb, bx.squaredNorm() / g2);
    }
    sup_kb_const = std::max(sup_kb_const, x.squaredNorm() - (g - bx).dot(x));
  }
  rep.k_b_hat = std::max(0.0, sup_kb);
  rep.h_b_hat = sup_hb;
  rep.K_b = std::max(0.0, sup_kb_const);
  rep.l1_margin = rep.K_b - sup_kb_const;
  rep.pass_rb = rep.k_b_hat < 0.5;
  return rep;
}

DriftModel make_linear(const MatrixXd& C, const MatrixXd& Bm, double check_radius) {
  if (C.rows() != C.cols() || Bm.rows() != Bm.cols() || C.rows() != Bm.rows())
    throw InvalidParams("linear: C and Bm must be square matrices of equal size");
  if ((C - C.transpose()).norm() > 1e-12 * (1.0 + C.norm()))
    throw InvalidParams("linear: C must be symmetric");
  MatrixXd Cs = (C + C.transpose()) / 2.0;
  Eigen::LLT<MatrixXd> llt(Cs);
  if (llt.info() != Eigen::Success)
    throw InvalidParams("linear: C must be positive definite");

  DriftModel m;
  m.dim = static_cast<int>(Cs.rows());
  m.check_radius = check_radius;
  m.quadratic = true;
  m.name = "linear";
  m.V = [Cs](const VectorXd& x) { return 0.5 * x.dot(Cs * x); };
  m.grad_V = [Cs](const VectorXd& x) -> VectorXd { return Cs * x; };
  m.hess_V = [Cs](const VectorXd&) { return Cs; };
  m.b = [Bm](const VectorXd& x) -> VectorXd { return Bm * x; };
  m.jac_b = [Bm](const VectorXd&) { return Bm; };
  const double trB = Bm.trace();
  m.div_b = [trB](const VectorXd&) { return trB; };
  return m;
}

DriftModel make_rotation(double omega, double check_radius) {
  MatrixXd C = MatrixXd::Identity(2, 2);
  MatrixXd J(2, 2);
  J << 0, -1, 1, 0;
  DriftModel m = make_linear(C, omega * J, check_radius);
  m.name = "rotation";
  return m;
}

DriftModel make_twowell(double omega, double beta, double check_radius, double taper_radius) {
  if (taper_radius <= 0) throw InvalidParams("twowell: taper_radius must be positive");
  const double Rt = taper_radius;

  auto grad = [](const VectorXd& x) -> VectorXd {
    VectorXd g(2);
    g[0] = x[0] * x[0] * x[0] - x[0];
    g[1] = x[1];
    return g;
  };
  auto hess = [](const VectorXd& x) -> MatrixXd {
    MatrixXd H = MatrixXd::Zero(2, 2);
    H(0, 0) = 3.0 * x[0] * x[0] - 1.0;
    H(1, 1) = 1.0;
    return H;
  };
  // J grad V rotated by 90 degrees: (-d2V, d1V)
  auto jgrad = [grad](const VectorXd& x) -> VectorXd {
    VectorXd g = grad(x);
    VectorXd r(2);
    r[0] = -g[1];
    r[1] = g[0];
    return r;
  };

  DriftModel m;
  m.dim = 2;
  m.check_radius = check_radius;
  m.quadratic = false;
  m.name = "twowell";
  m.V = [](const VectorXd& x) {
    double q = x[0] * x[0] - 1.0;
    return 0.25 * q * q + 0.5 * x[1] * x[1];
  };
  m.grad_V = grad;
  m.hess_V = hess;
  m.b = [omega, beta, Rt, jgrad](const VectorXd& x) -> VectorXd {
    double r = x.norm();
    double tau = taper_value((r - Rt) / Rt);
    return (omega * (1.0 + beta * x[0]) * tau) * jgrad(x);
  };
  m.jac_b = [omega, beta, Rt, grad, hess, jgrad](const VectorXd& x) -> MatrixXd {
    double r = x.norm();
    double u = (r - Rt) / Rt;
    double tau = taper_value(u);
    double dtau = taper_deriv(u) / Rt;  // d tau / d r
    MatrixXd H = hess(x);
    MatrixXd JH(2, 2);
    JH.row(0) = -H.row(1);
    JH.row(1) = H.row(0);
    VectorXd jg = jgrad(x);
    MatrixXd out = omega * (1.0 + beta * x[0]) * tau * JH;
    out.col(0) += omega * beta * tau * jg;
    if (dtau != 0.0 && r > 0.0) {
      out += (omega * (1.0 + beta * x[0]) * dtau / r) * (jg * x.transpose());
    }
    return out;
  };
  m.div_b = [omega, beta, Rt, grad, jgrad](const VectorXd& x) {
    // tr(J D2V) = 0 for symmetric D2V, so only the prefactor gradients remain.
    double r = x.norm();
    double u = (r - Rt) / Rt;
    double tau = taper_value(u);
    double dtau = taper_deriv(u) / Rt;
    VectorXd jg = jgrad(x);
    double div = omega * beta * tau * jg[0];
    if (dtau != 0.0 && r > 0.0) div += omega * (1.0 + beta * x[0]) * dtau * jg.dot(x) / r;
    return div;
  };
  return m;
}

}  // namespace epflow::model
