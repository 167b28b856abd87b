#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "epflow/model.hpp"
#include "epflow/montecarlo.hpp"
#include "epflow/philox.hpp"
#include "epflow/ratefn.hpp"
#include "epflow/riccati.hpp"
#include "epflow/spectral.hpp"

namespace py = pybind11;
using namespace epflow;

namespace {

py::array_t<std::uint64_t> philox_keystream(std::uint64_t seed, std::uint64_t stream, int n) {
  rng::Philox gen(seed, stream);
  py::array_t<std::uint64_t> out(n);
  auto buf = out.mutable_unchecked<1>();
  for (int i = 0; i < n; ++i) buf(i) = gen();
  return out;
}

}  // namespace

PYBIND11_MODULE(_epflow, m) {
  m.doc() = "Entropy production rate functions of nonequilibrium diffusions";

  py::class_<model::DriftModel>(m, "DriftModel")
      .def_readonly("dim", &model::DriftModel::dim)
      .def_readonly("check_radius", &model::DriftModel::check_radius)
      .def_readonly("quadratic", &model::DriftModel::quadratic)
      .def_readonly("name", &model::DriftModel::name)
      .def("V", [](const model::DriftModel& s, const Eigen::VectorXd& x) { return s.V(x); })
      .def("grad_V",
           [](const model::DriftModel& s, const Eigen::VectorXd& x) { return s.grad_V(x); })
      .def("hess_V",
           [](const model::DriftModel& s, const Eigen::VectorXd& x) { return s.hess_V(x); })
      .def("b", [](const model::DriftModel& s, const Eigen::VectorXd& x) { return s.b(x); })
      .def("jac_b", [](const model::DriftModel& s, const Eigen::VectorXd& x) { return s.jac_b(x); })
      .def("div_b",
           [](const model::DriftModel& s, const Eigen::VectorXd& x) { return s.div_b(x); });

  py::class_<model::CriticalPoint>(m, "CriticalPoint")
      .def_readonly("location", &model::CriticalPoint::location)
      .def_readonly("hess", &model::CriticalPoint::hess)
      .def_readonly("jac", &model::CriticalPoint::jac)
      .def_readonly("b_norm", &model::CriticalPoint::b_norm)
      .def_property_readonly(
          "kind", [](const model::CriticalPoint& cp) { return model::kind_name(cp.kind); });

  py::class_<model::AssumptionReport>(m, "AssumptionReport")
      .def_readonly("k_b_hat", &model::AssumptionReport::k_b_hat)
      .def_readonly("h_b_hat", &model::AssumptionReport::h_b_hat)
      .def_readonly("K_b", &model::AssumptionReport::K_b)
      .def_readonly("l1_margin", &model::AssumptionReport::l1_margin)
      .def_readonly("n_samples", &model::AssumptionReport::n_samples)
      .def_readonly("pass_rb", &model::AssumptionReport::pass_rb);

  m.def("make_rotation", &model::make_rotation, py::arg("omega"), py::arg("check_radius") = 3.0);
  m.def("make_linear", &model::make_linear, py::arg("C"), py::arg("Bm"),
        py::arg("check_radius") = 3.0);
  m.def("make_twowell", &model::make_twowell, py::arg("omega"), py::arg("beta"),
        py::arg("check_radius") = 3.0, py::arg("taper_radius") = 50.0);
  m.def(
      "find_critical_points",
      [](const model::DriftModel& mdl, double radius, int points_per_dim) {
        return model::find_critical_points(mdl, model::SeedGrid{radius, points_per_dim});
      },
      py::arg("model"), py::arg("radius") = 3.0, py::arg("points_per_dim") = 11);
  m.def("check_assumptions", &model::check_assumptions, py::arg("model"), py::arg("n_samples"),
        py::arg("seed"));

  py::class_<riccati::LocalLinearization>(m, "LocalLinearization")
      .def(py::init<Eigen::MatrixXd, Eigen::MatrixXd>(), py::arg("C"), py::arg("Bm"))
      .def_readonly("C", &riccati::LocalLinearization::C)
      .def_readonly("Bm", &riccati::LocalLinearization::Bm);

  py::class_<riccati::AreCoefficients>(m, "AreCoefficients")
      .def_readonly("B_alpha", &riccati::AreCoefficients::B_alpha)
      .def_readonly("K_alpha", &riccati::AreCoefficients::K_alpha)
      .def_readonly("alpha", &riccati::AreCoefficients::alpha);

  py::class_<riccati::AreSolution>(m, "AreSolution")
      .def_readonly("X", &riccati::AreSolution::X)
      .def_readonly("residual", &riccati::AreSolution::residual)
      .def_readonly("stability_margin", &riccati::AreSolution::stability_margin);

  m.def("build_coeffs", &riccati::build_coeffs, py::arg("lin"), py::arg("alpha"));
  m.def("hamiltonian", &riccati::hamiltonian, py::arg("coeffs"));
  m.def("solve_are", &riccati::solve_are, py::arg("coeffs"));
  m.def("leading_eig_linear", &riccati::leading_eig_linear, py::arg("lin"), py::arg("alpha"));
  m.def("trace_via_hamiltonian", &riccati::trace_via_hamiltonian, py::arg("coeffs"));

  py::class_<ratefn::Interval>(m, "Interval")
      .def_readonly("lo", &ratefn::Interval::lo)
      .def_readonly("hi", &ratefn::Interval::hi);

  py::class_<ratefn::CgfCurve>(m, "CgfCurve")
      .def_readonly("alphas", &ratefn::CgfCurve::alphas)
      .def_readonly("values", &ratefn::CgfCurve::values)
      .def_readonly("argmax_index", &ratefn::CgfCurve::argmax_index)
      .def_readonly("per_point_curves", &ratefn::CgfCurve::per_point_curves);

  py::class_<ratefn::RateFunction>(m, "RateFunction")
      .def_readonly("sigmas", &ratefn::RateFunction::sigmas)
      .def_readonly("values", &ratefn::RateFunction::values)
      .def_readonly("domain", &ratefn::RateFunction::domain)
      .def_readonly("flat_interval", &ratefn::RateFunction::flat_interval);

  m.def("alpha_interval", &ratefn::alpha_interval, py::arg("k_b"), py::arg("h_b"));
  m.def("default_alpha_grid", &ratefn::default_alpha_grid, py::arg("admissible"),
        py::arg("n") = 201);
  m.def(
      "semiclassical_cgf",
      [](const model::DriftModel& mdl, const std::vector<double>& alphas) {
        return ratefn::semiclassical_cgf(mdl, alphas);
      },
      py::arg("model"), py::arg("alphas"));
  m.def("legendre", &ratefn::legendre, py::arg("curve"), py::arg("sigma_grid"));
  m.def("default_sigma_grid", &ratefn::default_sigma_grid, py::arg("curve"),
        py::arg("n_fill") = 201);
  m.def("mean_ep_local", &ratefn::mean_ep_local, py::arg("lin"));
  m.def(
      "flat_interval",
      [](const model::DriftModel& mdl) { return ratefn::flat_interval(mdl); },
      py::arg("model"));
  m.def("gc_defect", &ratefn::gc_defect, py::arg("curve"));
  m.def("rate_gc_defect", &ratefn::rate_gc_defect, py::arg("rf"));
  m.def("convex_hull_check", &ratefn::convex_hull_check, py::arg("curve"), py::arg("sigma_grid"));
  m.def(
      "admissible_pair",
      [](double k_b, double h_b, double alpha, double p) {
        return ratefn::admissible_pair({k_b, h_b, alpha, p});
      },
      py::arg("k_b"), py::arg("h_b"), py::arg("alpha"), py::arg("p"));

  py::class_<spectral::GridSpec>(m, "GridSpec")
      .def_readonly("box", &spectral::GridSpec::box)
      .def_readonly("n_per_dim", &spectral::GridSpec::n_per_dim);

  py::class_<spectral::SpectralResult>(m, "SpectralResult")
      .def_readonly("lambda_", &spectral::SpectralResult::lambda)
      .def_readonly("eigvec", &spectral::SpectralResult::eigvec)
      .def_readonly("residual", &spectral::SpectralResult::residual)
      .def_readonly("iterations", &spectral::SpectralResult::iterations);

  m.def("auto_grid", &spectral::auto_grid, py::arg("model"), py::arg("alpha"), py::arg("eps"),
        py::arg("min_n") = 32);
  m.def(
      "leading_eigenvalue",
      [](const model::DriftModel& mdl, double alpha, double eps, const spectral::GridSpec& grid,
         double tol, int max_iter) {
        auto op = spectral::assemble(mdl, alpha, eps, grid);
        return spectral::leading_eigpair(op, spectral::semiclassical_shift(mdl, alpha), tol,
                                         max_iter);
      },
      py::arg("model"), py::arg("alpha"), py::arg("eps"), py::arg("grid"), py::arg("tol") = 1e-7,
      py::arg("max_iter") = 500);
  m.def(
      "fk_propagate",
      [](const model::DriftModel& mdl, double alpha, double eps, const spectral::GridSpec& grid,
         const Eigen::VectorXd& x0, double t, double dt) {
        spectral::FkInit init;
        init.kind = spectral::FkInit::Kind::Point;
        init.x0 = x0;
        return spectral::fk_propagate(mdl, alpha, eps, grid, nullptr, init, t, dt);
      },
      py::arg("model"), py::arg("alpha"), py::arg("eps"), py::arg("grid"), py::arg("x0"),
      py::arg("t"), py::arg("dt") = 1e-3);

  py::class_<montecarlo::EpEnsemble>(m, "EpEnsemble")
      .def_readonly("samples", &montecarlo::EpEnsemble::samples)
      .def_readonly("strat_samples", &montecarlo::EpEnsemble::strat_samples)
      .def_readonly("final_states", &montecarlo::EpEnsemble::final_states)
      .def_readonly("horizon", &montecarlo::EpEnsemble::horizon)
      .def_readonly("moment_times", &montecarlo::EpEnsemble::moment_times)
      .def_readonly("moment_means", &montecarlo::EpEnsemble::moment_means);

  py::class_<montecarlo::MeanEstimate>(m, "MeanEstimate")
      .def_readonly("value", &montecarlo::MeanEstimate::value)
      .def_readonly("se", &montecarlo::MeanEstimate::se);

  py::class_<montecarlo::MgfEstimate>(m, "MgfEstimate")
      .def_readonly("alpha", &montecarlo::MgfEstimate::alpha)
      .def_readonly("log_rate", &montecarlo::MgfEstimate::log_rate)
      .def_readonly("se", &montecarlo::MgfEstimate::se)
      .def_readonly("degenerate", &montecarlo::MgfEstimate::degenerate);

  m.def(
      "simulate",
      [](const model::DriftModel& mdl, double eps, double dt, double horizon, int n_paths,
         std::uint64_t seed, const std::string& init, const Eigen::VectorXd& x0, double t_burn,
         int threads) {
        montecarlo::SimConfig cfg;
        cfg.eps = eps;
        cfg.dt = dt;
        cfg.horizon = horizon;
        cfg.n_paths = n_paths;
        cfg.seed = seed;
        cfg.threads = threads;
        if (init == "mu0")
          cfg.init.kind = montecarlo::InitSpec::Kind::Mu0Gaussian;
        else if (init == "burn_in")
          cfg.init.kind = montecarlo::InitSpec::Kind::BurnIn;
        else
          cfg.init.kind = montecarlo::InitSpec::Kind::Point;
        cfg.init.x0 = x0.size() == mdl.dim ? x0 : Eigen::VectorXd::Zero(mdl.dim);
        cfg.init.t_burn = t_burn;
        return montecarlo::simulate(mdl, cfg);
      },
      py::arg("model"), py::arg("eps"), py::arg("dt"), py::arg("horizon"), py::arg("n_paths"),
      py::arg("seed"), py::arg("init") = "point", py::arg("x0") = Eigen::VectorXd(),
      py::arg("t_burn") = 10.0, py::arg("threads") = 0);
  m.def("estimate_mean_ep", &montecarlo::estimate_mean_ep, py::arg("ensemble"));
  m.def("second_moment", &montecarlo::second_moment, py::arg("ensemble"));
  m.def("estimate_mean_ep_stationary", &montecarlo::estimate_mean_ep_stationary, py::arg("model"),
        py::arg("eps"), py::arg("t_long"), py::arg("dt"), py::arg("seed"),
        py::arg("t_burn") = 10.0);
  m.def("estimate_mgf", &montecarlo::estimate_mgf, py::arg("ensemble"), py::arg("alphas"));
  m.def(
      "tail_histogram",
      [](const montecarlo::EpEnsemble& ens, int bins) {
        std::vector<std::tuple<double, double, long>> rows;
        for (const auto& r : montecarlo::tail_histogram(ens, bins))
          rows.emplace_back(r.midpoint, r.rate_proxy, r.count);
        return rows;
      },
      py::arg("ensemble"), py::arg("bins"));

  m.def(
      "e_eps_sweep",
      [](const model::DriftModel& mdl, double alpha, const std::vector<double>& eps_list,
         int min_n) {
        std::vector<std::tuple<double, double, double>> rows;
        for (const auto& r : spectral::e_eps_sweep(mdl, alpha, eps_list, min_n))
          rows.emplace_back(r.eps, r.lambda, r.error);
        return rows;
      },
      py::arg("model"), py::arg("alpha"), py::arg("eps_list"), py::arg("min_n") = 32);

  m.def(
      "region_raster",
      [](double k_b, double h_b, std::pair<double, double> alpha_range,
         std::pair<double, double> p_range, int resolution) {
        auto r = ratefn::region_raster(k_b, h_b, {alpha_range.first, alpha_range.second},
                                       {p_range.first, p_range.second}, resolution);
        py::array_t<bool> mask({resolution, resolution});
        auto buf = mask.mutable_unchecked<2>();
        for (int i = 0; i < resolution; ++i)
          for (int j = 0; j < resolution; ++j) buf(i, j) = r.at(i, j);
        return py::make_tuple(r.alphas, r.ps, mask);
      },
      py::arg("k_b"), py::arg("h_b"), py::arg("alpha_range"), py::arg("p_range"),
      py::arg("resolution"));

  m.def("philox_keystream", &philox_keystream, py::arg("seed"), py::arg("stream"), py::arg("n"));
}
