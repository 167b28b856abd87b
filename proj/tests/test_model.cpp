#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "epflow/errors.hpp"
#include "epflow/model.hpp"

using namespace epflow;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd rotation_generator() {
  MatrixXd J(2, 2);
  J << 0, -1, 1, 0;
  return J;
}

// finite-difference gradient for the evaluator-consistency checks
VectorXd fd_grad(const model::DriftModel& m, const VectorXd& x, double h = 1e-5) {
  VectorXd g(m.dim);
  for (int d = 0; d < m.dim; ++d) {
    VectorXd xp = x, xm = x;
    xp[d] += h;
    xm[d] -= h;
    g[d] = (m.V(xp) - m.V(xm)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("builtin evaluators are internally consistent") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> unif(-2.5, 2.5);
  for (const auto& m : {model::make_rotation(1.0), model::make_twowell(1.0, 0.3),
                        model::make_linear(MatrixXd::Identity(2, 2) * 2.0,
                                           0.7 * rotation_generator())}) {
    for (int trial = 0; trial < 100; ++trial) {
      VectorXd x(m.dim);
      for (int d = 0; d < m.dim; ++d) x[d] = unif(rng);
      if (m.grad_V(x).norm() < 0.3) continue;  // FD quotient degenerates at tiny gradients

      const VectorXd fd = fd_grad(m, x);
      const VectorXd ex = m.grad_V(x);
      CHECK((fd - ex).norm() / ex.norm() <= 1e-6);

      const MatrixXd H = m.hess_V(x);
      CHECK((H - H.transpose()).norm() == 0.0);
      CHECK(std::abs(m.div_b(x) - m.jac_b(x).trace()) <= 1e-10);
    }
  }
}

TEST_CASE("jacobian of b matches finite differences, including the taper band") {
  model::DriftModel m = model::make_twowell(0.8, 0.3, 3.0, /*taper_radius=*/2.0);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unif(-4.0, 4.0);  // spans taper region [2, 4]
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd x(2);
    x << unif(rng), unif(rng);
    const double h = 1e-6;
    MatrixXd fd(2, 2);
    for (int d = 0; d < 2; ++d) {
      VectorXd xp = x, xm = x;
      xp[d] += h;
      xm[d] -= h;
      fd.col(d) = (m.b(xp) - m.b(xm)) / (2 * h);
    }
    const MatrixXd jac = m.jac_b(x);
    CHECK((fd - jac).norm() <= 1e-6 * (1.0 + jac.norm()));
    CHECK(m.div_b(x) == doctest::Approx(jac.trace()).epsilon(1e-10));
  }
}

TEST_CASE("twowell critical points: two minima and a saddle at the analytic roots") {
  auto m = model::make_twowell(1.0, 0.0);
  auto cps = model::find_critical_points(m, model::SeedGrid{3.0, 11});
  REQUIRE(cps.size() == 3);

  int mins = 0, saddles = 0;
  for (const auto& cp : cps) {
    CHECK(m.grad_V(cp.location).norm() <= 1e-9);
    CHECK(cp.b_norm <= 1e-8);
    if (cp.kind == model::CriticalKind::LocalMin) {
      ++mins;
      CHECK(std::abs(std::abs(cp.location[0]) - 1.0) <= 1e-9);
      CHECK(std::abs(cp.location[1]) <= 1e-9);
      CHECK(cp.hess.isApprox(Eigen::Vector2d(2.0, 1.0).asDiagonal().toDenseMatrix(), 1e-9));
    } else {
      ++saddles;
      CHECK(cp.kind == model::CriticalKind::Saddle);
      CHECK(cp.location.norm() <= 1e-9);
    }
  }
  CHECK(mins == 2);
  CHECK(saddles == 1);
}

TEST_CASE("quadratic model has a single minimum at the origin") {
  auto m = model::make_linear(MatrixXd::Identity(2, 2), 0.4 * rotation_generator());
  auto cps = model::find_critical_points(m, model::SeedGrid{3.0, 11});
  REQUIRE(cps.size() == 1);
  CHECK(cps[0].location.norm() <= 1e-10);
  CHECK(cps[0].kind == model::CriticalKind::LocalMin);
}

TEST_CASE("rotation model has a single minimum (no interior saddle)") {
  auto cps = model::find_critical_points(model::make_rotation(2.0), model::SeedGrid{3.0, 11});
  REQUIRE(cps.size() == 1);
  CHECK(cps[0].kind == model::CriticalKind::LocalMin);
}

TEST_CASE("twowell Db at the minima picks up the (1 + beta x1) factor") {
  auto m = model::make_twowell(1.0, 0.3);
  auto cps = model::find_critical_points(m, model::SeedGrid{3.0, 11});
  MatrixXd jac_left, jac_right;
  for (const auto& cp : cps) {
    if (cp.kind != model::CriticalKind::LocalMin) continue;
    (cp.location[0] < 0 ? jac_left : jac_right) = cp.jac;
  }
  // Db|x = omega (1 + beta x1) J D2V at roots of grad V
  const MatrixXd JH = rotation_generator() * Eigen::Vector2d(2.0, 1.0).asDiagonal().toDenseMatrix();
  CHECK(jac_left.isApprox(0.7 * JH, 1e-9));
  CHECK(jac_right.isApprox(1.3 * JH, 1e-9));
  CHECK(!jac_left.isApprox(jac_right, 1e-3));
}

TEST_CASE("check_assumptions on the rotation family") {
  SUBCASE("rotation: b orthogonal to grad V, |b| = omega |grad V|") {
    for (double omega : {0.5, 1.0, 2.0}) {
      auto rep = model::check_assumptions(model::make_rotation(omega), 4096, 1);
      CHECK(rep.k_b_hat <= 1e-12);
      CHECK(rep.h_b_hat == doctest::Approx(omega * omega).epsilon(1e-10));
      CHECK(rep.pass_rb);
      CHECK(rep.n_samples == 4096);
      CHECK(rep.l1_margin >= 0.0);
    }
  }
  SUBCASE("b = 0") {
    auto rep = model::check_assumptions(
        model::make_linear(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2)), 1024, 3);
    CHECK(rep.k_b_hat == 0.0);
    CHECK(rep.h_b_hat == 0.0);
    CHECK(rep.pass_rb);
  }
  SUBCASE("twowell tapered: k vanishes by orthogonality, h follows the prefactor") {
    auto rep = model::check_assumptions(model::make_twowell(1.0, 0.3), 4096, 5);
    CHECK(rep.k_b_hat <= 1e-12);
    // |b|^2/|grad V|^2 = (1 + beta x1)^2 inside the taper, sup over the ball
    CHECK(rep.h_b_hat <= std::pow(1.0 + 0.3 * 3.0, 2) + 1e-9);
    CHECK(rep.h_b_hat >= 1.0);
    CHECK(rep.pass_rb);
  }
}

TEST_CASE("linear builtin validates its inputs") {
  MatrixXd notpd(2, 2);
  notpd << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(model::make_linear(notpd, MatrixXd::Zero(2, 2)), InvalidParams);
  MatrixXd notsym(2, 2);
  notsym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(model::make_linear(notsym, MatrixXd::Zero(2, 2)), InvalidParams);
}

TEST_CASE("linear(I, omega J) agrees with rotation(omega) evaluator by evaluator") {
  auto a = model::make_linear(MatrixXd::Identity(2, 2), 1.3 * rotation_generator());
  auto b = model::make_rotation(1.3);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd x(2);
    x << unif(rng), unif(rng);
    CHECK(a.V(x) == b.V(x));
    CHECK(a.grad_V(x) == b.grad_V(x));
    CHECK(a.b(x) == b.b(x));
    CHECK(a.div_b(x) == b.div_b(x));
  }
}

TEST_CASE("3d linear model round-trips through critical point search") {
  MatrixXd C(3, 3);
  C << 2, 0.3, 0, 0.3, 1.5, 0.1, 0, 0.1, 1;
  MatrixXd Bm = MatrixXd::Zero(3, 3);
  Bm(0, 1) = -0.4;
  Bm(1, 0) = 0.4;
  auto m = model::make_linear(C, Bm);
  auto cps = model::find_critical_points(m, model::SeedGrid{2.0, 7});
  REQUIRE(cps.size() == 1);
  CHECK(cps[0].kind == model::CriticalKind::LocalMin);
}
