#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "epflow/config.hpp"
#include "epflow/csv.hpp"
#include "epflow/errors.hpp"
#include "epflow/model.hpp"
#include "epflow/montecarlo.hpp"
#include "epflow/ratefn.hpp"
#include "epflow/riccati.hpp"
#include "epflow/spectral.hpp"

namespace epflow::cli {

namespace fs = std::filesystem;
using csv::fmt17;

namespace {

model::DriftModel build_model(const ModelSection& ms) {
  if (ms.name == "rotation") return model::make_rotation(ms.omega, ms.check_radius);
  if (ms.name == "twowell")
    return model::make_twowell(ms.omega, ms.beta, ms.check_radius, ms.taper_radius);
  return model::make_linear(ms.C, ms.Bm, ms.check_radius);
}

std::ofstream open_out(const RunOverrides& ov, const std::string& name) {
  fs::path dir(ov.out_dir);
  if (!dir.empty()) fs::create_directories(dir);
  fs::path p = dir / name;
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot open output file: " + p.string());
  return out;
}

int resolve_threads(const RunOverrides& ov) {
  if (ov.threads) return *ov.threads;
  if (const char* env = std::getenv("EPFLOW_THREADS")) return std::atoi(env);
  return 0;
}

montecarlo::InitSpec to_init_spec(const InitSection& init, int dim) {
  montecarlo::InitSpec out;
  if (init.kind == "mu0") {
    out.kind = montecarlo::InitSpec::Kind::Mu0Gaussian;
  } else if (init.kind == "burn_in") {
    out.kind = montecarlo::InitSpec::Kind::BurnIn;
    out.t_burn = init.t_burn;
  } else {
    out.kind = montecarlo::InitSpec::Kind::Point;
  }
  out.x0 = Eigen::VectorXd::Zero(dim);
  for (int d = 0; d < dim && d < static_cast<int>(init.x0.size()); ++d) out.x0[d] = init.x0[d];
  return out;
}

void echo_model(const ModelSection& ms) {
  std::printf("# model.name = %s\n", ms.name.c_str());
  if (ms.name != "linear") {
    std::printf("# model.omega = %s\n", fmt17(ms.omega).c_str());
    if (ms.name == "twowell") {
      std::printf("# model.beta = %s\n", fmt17(ms.beta).c_str());
      std::printf("# model.taper_radius = %s\n", fmt17(ms.taper_radius).c_str());
    }
  }
  std::printf("# model.check_radius = %s\n", fmt17(ms.check_radius).c_str());
}

void run_rate(const model::DriftModel& m, const RateParams& p, const RunOverrides& ov) {
  const std::uint64_t seed = ov.seed.value_or(p.seed);
  std::printf("# rate.alpha_points = %d\n# rate.sigma_fill = %d\n# rate.n_samples = %d\n",
              p.alpha_points, p.sigma_fill, p.n_samples);
  std::printf("# rate.seed = %llu\n", static_cast<unsigned long long>(seed));

  auto report = model::check_assumptions(m, p.n_samples, seed);
  auto interval = ratefn::alpha_interval(report.k_b_hat, report.h_b_hat);
  auto grid = ratefn::default_alpha_grid(interval, p.alpha_points);
  auto points = model::find_critical_points(m, model::SeedGrid{m.check_radius, 11});
  auto curve = ratefn::semiclassical_cgf(points, grid);
  auto sigma = ratefn::default_sigma_grid(curve, p.sigma_fill);
  auto rf = ratefn::legendre(curve, sigma);
  rf.flat_interval = ratefn::flat_interval(points);
  const double gc = ratefn::gc_defect(curve);
  const double rgc = ratefn::rate_gc_defect(rf);
  const double hull = ratefn::convex_hull_check(curve, sigma);

  {
    auto out = open_out(ov, p.out_cgf);
    out << "# command = rate\n";
    out << "# k_b_hat = " << fmt17(report.k_b_hat) << "\n";
    out << "# h_b_hat = " << fmt17(report.h_b_hat) << "\n";
    out << "# alpha_interval = " << fmt17(interval.lo) << " " << fmt17(interval.hi) << "\n";
    out << "# critical_points = " << points.size() << "\n";
    out << "# gc_defect = " << fmt17(gc) << "\n";
    out << "alpha,e,argmax_j\n";
    for (size_t k = 0; k < curve.alphas.size(); ++k)
      out << fmt17(curve.alphas[k]) << "," << fmt17(curve.values[k]) << ","
          << curve.argmax_index[k] << "\n";
  }
  {
    auto out = open_out(ov, p.out_rate);
    out << "# command = rate\n";
    // the domain is the derivative range over the computed alpha grid, not
    // the measure-theoretic interval of the steady-state theory
    out << "# sigma_domain = " << fmt17(rf.domain.lo) << " " << fmt17(rf.domain.hi) << "\n";
    if (rf.flat_interval)
      out << "# flat_interval = " << fmt17(rf.flat_interval->lo) << " "
          << fmt17(rf.flat_interval->hi) << "\n";
    else
      out << "# flat_interval = none\n";
    out << "# rate_gc_defect = " << fmt17(rgc) << "\n";
    out << "# convex_hull_deviation = " << fmt17(hull) << "\n";
    out << "sigma,e_star\n";
    for (size_t k = 0; k < rf.sigmas.size(); ++k)
      out << fmt17(rf.sigmas[k]) << "," << fmt17(rf.values[k]) << "\n";
  }
  std::printf("# gc_defect = %s\n# rate_gc_defect = %s\n# hull_deviation = %s\n",
              fmt17(gc).c_str(), fmt17(rgc).c_str(), fmt17(hull).c_str());
}

spectral::GridSpec spectrum_grid(const model::DriftModel& m, const SpectrumParams& p) {
  if (p.n > 0 && p.box_lo && p.box_hi) {
    spectral::GridSpec g;
    g.box.assign(m.dim, {*p.box_lo, *p.box_hi});
    g.n_per_dim.assign(m.dim, p.n);
    return g;
  }
  return spectral::auto_grid(m, p.alpha, p.eps);
}

double shift_for(const model::DriftModel& m, double alpha, const spectral::DeformedOperator& op) {
  try {
    return spectral::semiclassical_shift(m, alpha);
  } catch (const NumericalError&) {
    // no ARE shift available: Gershgorin bound (column discs bound the
    // spectrum of the transpose, which is the same spectrum)
    double mx = 0.0;
    for (long i = 0; i < op.entries.outerSize(); ++i) {
      double disc = 0.0;
      for (Eigen::SparseMatrix<double>::InnerIterator it(op.entries, i); it; ++it)
        disc += it.row() == it.col() ? it.value() : std::abs(it.value());
      mx = std::max(mx, disc);
    }
    return mx + 1.0;
  }
}

void run_spectrum(const model::DriftModel& m, const SpectrumParams& p, const RunOverrides& ov) {
  std::printf("# spectrum.alpha = %s\n# spectrum.eps = %s\n# spectrum.tol = %s\n",
              fmt17(p.alpha).c_str(), fmt17(p.eps).c_str(), fmt17(p.tol).c_str());
  auto grid = spectrum_grid(m, p);
  auto op = spectral::assemble(m, p.alpha, p.eps, grid);
  auto res = spectral::leading_eigpair(op, shift_for(m, p.alpha, op), p.tol, p.max_iter);

  auto out = open_out(ov, p.out);
  out << "eps,alpha,lambda,residual,n,box_lo,box_hi\n";
  out << fmt17(p.eps) << "," << fmt17(p.alpha) << "," << fmt17(res.lambda) << ","
      << fmt17(res.residual) << "," << grid.n_per_dim[0] << "," << fmt17(grid.box[0][0]) << ","
      << fmt17(grid.box[0][1]) << "\n";
  std::printf("# lambda = %s (residual %s, %d iterations)\n", fmt17(res.lambda).c_str(),
              fmt17(res.residual).c_str(), res.iterations);

  if (!p.out_eigvec.empty() && m.dim == 2) {
    auto vout = open_out(ov, p.out_eigvec);
    vout << "x1,x2,psi\n";
    const int n0 = grid.n_per_dim[0] - 2;
    const int n1 = grid.n_per_dim[1] - 2;
    for (int j = 0; j < n1; ++j)
      for (int i = 0; i < n0; ++i) {
        const double x1 = grid.box[0][0] + (i + 1) * grid.spacing(0);
        const double x2 = grid.box[1][0] + (j + 1) * grid.spacing(1);
        vout << fmt17(x1) << "," << fmt17(x2) << ","
             << fmt17(res.eigvec[static_cast<long>(j) * n0 + i]) << "\n";
      }
  }
}

void run_sweep(const model::DriftModel& m, const SweepParams& p, const RunOverrides& ov) {
  std::printf("# sweep.alpha = %s\n", fmt17(p.alpha).c_str());
  auto rows = spectral::e_eps_sweep(m, p.alpha, p.eps_list, p.min_n);
  const double target = spectral::semiclassical_shift(m, p.alpha) - 1.0;

  bool monotone = true;
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i].error > 1.2 * rows[i - 1].error) monotone = false;
  if (!monotone)
    std::fprintf(stderr, "# warning: sweep errors are not nonincreasing within 20%% slack\n");

  auto out = open_out(ov, p.out);
  out << "# semiclassical_target = " << fmt17(target) << "\n";
  out << "# errors_nonincreasing = " << (monotone ? 1 : 0) << "\n";
  out << "eps,alpha,lambda,residual,n,box_lo,box_hi\n";
  for (const auto& r : rows) {
    spectral::GridSpec g = spectral::auto_grid(m, p.alpha, r.eps, p.min_n);
    out << fmt17(r.eps) << "," << fmt17(p.alpha) << "," << fmt17(r.lambda) << ","
        << fmt17(r.residual) << "," << r.n0 << "," << fmt17(g.box[0][0]) << ","
        << fmt17(g.box[0][1]) << "\n";
    std::printf("# eps = %s: lambda = %s, error = %s\n", fmt17(r.eps).c_str(),
                fmt17(r.lambda).c_str(), fmt17(r.error).c_str());
  }
}

void write_mc_header(std::ofstream& out, const model::DriftModel& m,
                     const montecarlo::SimConfig& cfg) {
  out << "# model = " << m.name << ", eps = " << fmt17(cfg.eps) << ", dt = " << fmt17(cfg.dt)
      << ", horizon = " << fmt17(cfg.horizon) << ", n_paths = " << cfg.n_paths
      << ", seed = " << cfg.seed << "\n";
}

void run_simulate(const model::DriftModel& m, const SimulateParams& p, const RunOverrides& ov) {
  montecarlo::SimConfig cfg;
  cfg.eps = p.eps;
  cfg.dt = p.dt;
  cfg.horizon = p.horizon;
  cfg.n_paths = p.n_paths;
  cfg.seed = ov.seed.value_or(p.seed);
  cfg.init = to_init_spec(p.init, m.dim);
  cfg.threads = resolve_threads(ov);
  std::printf("# simulate.eps = %s, dt = %s, horizon = %s, n_paths = %d, seed = %llu\n",
              fmt17(cfg.eps).c_str(), fmt17(cfg.dt).c_str(), fmt17(cfg.horizon).c_str(),
              cfg.n_paths, static_cast<unsigned long long>(cfg.seed));

  auto ens = montecarlo::simulate(m, cfg);
  auto mean = montecarlo::estimate_mean_ep(ens);
  auto mgf = p.alphas.empty() ? std::vector<montecarlo::MgfEstimate>{}
                              : montecarlo::estimate_mgf(ens, p.alphas);

  {
    auto out = open_out(ov, p.out_paths);
    write_mc_header(out, m, cfg);
    out << "path_id,S_ito,S_strat";
    for (int d = 0; d < m.dim; ++d) out << ",x" << d + 1 << "_final";
    out << "\n";
    for (int i = 0; i < cfg.n_paths; ++i) {
      out << i << "," << fmt17(ens.samples[i]) << "," << fmt17(ens.strat_samples[i]);
      for (int d = 0; d < m.dim; ++d) out << "," << fmt17(ens.final_states(i, d));
      out << "\n";
    }
  }
  {
    auto out = open_out(ov, p.out_summary);
    write_mc_header(out, m, cfg);
    out << "# mean_ep_rate = " << fmt17(mean.value) << ", se = " << fmt17(mean.se) << "\n";
    out << "# second_moment = " << fmt17(montecarlo::second_moment(ens)) << "\n";
    out << "alpha,mgf_log_rate,se\n";
    for (const auto& est : mgf)
      out << fmt17(est.alpha) << "," << fmt17(est.log_rate) << "," << fmt17(est.se) << "\n";
  }
  if (p.bins > 0) {
    auto hist = montecarlo::tail_histogram(ens, p.bins);
    auto out = open_out(ov, p.out_hist);
    write_mc_header(out, m, cfg);
    out << "midpoint,rate_proxy\n";
    for (const auto& row : hist) out << fmt17(row.midpoint) << "," << fmt17(row.rate_proxy) << "\n";
  }
  std::printf("# mean_ep_rate = %s +- %s\n", fmt17(mean.value).c_str(), fmt17(mean.se).c_str());
}

void run_mgf_check(const model::DriftModel& m, const MgfCheckParams& p, const RunOverrides& ov) {
  montecarlo::SimConfig cfg;
  cfg.eps = p.eps;
  cfg.dt = p.dt;
  cfg.horizon = p.t;
  cfg.n_paths = p.n_paths;
  cfg.seed = ov.seed.value_or(p.seed);
  cfg.init = to_init_spec(p.init, m.dim);
  cfg.threads = resolve_threads(ov);
  std::printf("# mgf-check.eps = %s, t = %s, n_paths = %d, seed = %llu\n", fmt17(p.eps).c_str(),
              fmt17(p.t).c_str(), p.n_paths, static_cast<unsigned long long>(cfg.seed));

  spectral::FkInit fk_init;
  if (cfg.init.kind == montecarlo::InitSpec::Kind::Mu0Gaussian) {
    fk_init.kind = spectral::FkInit::Kind::Mu0;
  } else if (cfg.init.kind == montecarlo::InitSpec::Kind::Point) {
    fk_init.kind = spectral::FkInit::Kind::Point;
    fk_init.x0 = cfg.init.x0;
  } else {
    throw ValidationError("mgf-check: init must be point or mu0 (the FK route has no burn-in)");
  }

  auto ens = montecarlo::simulate(m, cfg);
  auto mgf = montecarlo::estimate_mgf(ens, p.alphas);

  auto out = open_out(ov, p.out);
  write_mc_header(out, m, cfg);
  out << "alpha,mc_log_rate,mc_se,fk_log_rate,abs_diff,within_3se\n";
  for (const auto& est : mgf) {
    // wider box than the eigensolve default (mass leaks at the boundary) and
    // a spacing fine enough that the h^2 operator error stays below the
    // Monte Carlo allowance
    spectral::GridSpec grid = spectral::auto_grid(m, est.alpha, p.eps, p.n > 0 ? p.n : 192);
    for (int d = 0; d < grid.dim(); ++d) {
      const double extra = 1.0;
      grid.box[d][0] -= extra;
      grid.box[d][1] += extra;
      grid.n_per_dim[d] += 2 * static_cast<int>(std::ceil(extra / grid.spacing(d)));
    }
    const double chi = spectral::fk_propagate(m, est.alpha, p.eps, grid, nullptr, fk_init, p.t,
                                              p.fk_dt);
    const double fk_rate = std::log(chi) / p.t;
    const double diff = std::abs(est.log_rate - fk_rate);
    const bool pass = diff <= 3.0 * est.se;
    out << fmt17(est.alpha) << "," << fmt17(est.log_rate) << "," << fmt17(est.se) << ","
        << fmt17(fk_rate) << "," << fmt17(diff) << "," << (pass ? 1 : 0) << "\n";
    std::printf("# alpha = %s: mc = %s +- %s, fk = %s, %s\n", fmt17(est.alpha).c_str(),
                fmt17(est.log_rate).c_str(), fmt17(est.se).c_str(), fmt17(fk_rate).c_str(),
                pass ? "agree" : "DISAGREE");
  }
}

void run_admissible(const AdmissibleParams& p, const RunOverrides& ov) {
  std::printf("# admissible.k_b = %s, h_b = %s, resolution = %d\n", fmt17(p.k_b).c_str(),
              fmt17(p.h_b).c_str(), p.resolution);
  auto raster = ratefn::region_raster(p.k_b, p.h_b, {p.alpha_lo, p.alpha_hi}, {p.p_lo, p.p_hi},
                                      p.resolution);
  auto out = open_out(ov, p.out);
  out << "# k_b = " << fmt17(p.k_b) << ", h_b = " << fmt17(p.h_b) << "\n";
  out << "alpha,p,admissible\n";
  for (size_t i = 0; i < raster.alphas.size(); ++i)
    for (size_t j = 0; j < raster.ps.size(); ++j)
      out << fmt17(raster.alphas[i]) << "," << fmt17(raster.ps[j]) << ","
          << (raster.at(static_cast<int>(i), static_cast<int>(j)) ? 1 : 0) << "\n";
}

}  // namespace

void run(const RunConfig& cfg, const RunOverrides& ov) {
  echo_model(cfg.model);
  if (cfg.command == "admissible") {
    run_admissible(std::get<AdmissibleParams>(cfg.params), ov);
    return;
  }
  const model::DriftModel m = build_model(cfg.model);
  if (cfg.command == "rate")
    run_rate(m, std::get<RateParams>(cfg.params), ov);
  else if (cfg.command == "spectrum")
    run_spectrum(m, std::get<SpectrumParams>(cfg.params), ov);
  else if (cfg.command == "sweep")
    run_sweep(m, std::get<SweepParams>(cfg.params), ov);
  else if (cfg.command == "simulate")
    run_simulate(m, std::get<SimulateParams>(cfg.params), ov);
  else if (cfg.command == "mgf-check")
    run_mgf_check(m, std::get<MgfCheckParams>(cfg.params), ov);
  else
    throw ValidationError("unknown command: " + cfg.command);
}

}  // namespace epflow::cli
