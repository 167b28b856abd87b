#include "epflow/montecarlo.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "epflow/errors.hpp"
#include "epflow/philox.hpp"

namespace epflow::montecarlo {

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// One standard normal by Box-Muller on the Philox stream. Keeping the
// transform in-house makes the stream layout identical on every platform.
class NormalSource {
 public:
  explicit NormalSource(rng::Philox& gen) : gen_(gen) {}
  double operator()() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    const double u1 = gen_.uniform();
    const double u2 = gen_.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * M_PI * u2;
    cached_ = r * std::sin(th);
    have_ = true;
    return r * std::cos(th);
  }

 private:
  rng::Philox& gen_;
  double cached_ = 0.0;
  bool have_ = false;
};

struct PathResult {
  double s_ito;
  double s_strat;
};

}  // namespace

EpEnsemble simulate(const model::DriftModel& m, const SimConfig& cfg) {
  if (cfg.n_paths < 1) throw InvalidParams("simulate: n_paths must be at least 1");
  if (!(cfg.dt > 0.0) || cfg.dt > cfg.horizon / 100.0)
    throw InvalidParams("simulate: dt must be positive and at most horizon/100");
  if (cfg.init.kind == InitSpec::Kind::Mu0Gaussian && !m.quadratic)
    throw InvalidParams("simulate: mu0_gaussian initial data requires a quadratic V");

  const int dim = m.dim;
  const long n_steps = std::lround(cfg.horizon / cfg.dt);
  const long burn_steps = cfg.init.kind == InitSpec::Kind::BurnIn
                              ? std::lround(cfg.init.t_burn / cfg.dt)
                              : 0;
  const double blow_r = 100.0 * m.check_radius;
  const double root_noise = std::sqrt(2.0 * cfg.eps * cfg.dt);
  const double ito_noise = std::sqrt(2.0 * cfg.dt / cfg.eps);

  MatrixXd mu0_chol;  // L with L L' = eps C^-1, for mu0 initial data
  if (cfg.init.kind == InitSpec::Kind::Mu0Gaussian) {
    const MatrixXd C = m.hess_V(VectorXd::Zero(dim));
    mu0_chol = Eigen::LLT<MatrixXd>(cfg.eps * C.inverse()).matrixL();
  }
  VectorXd x_start0 = cfg.init.x0.size() == dim ? cfg.init.x0 : VectorXd::Zero(dim);

  const int n_checks = static_cast<int>(std::min<long>(64, n_steps));
  const long stride = (n_steps + n_checks - 1) / n_checks;

  EpEnsemble ens;
  ens.samples.resize(cfg.n_paths);
  ens.strat_samples.resize(cfg.n_paths);
  ens.final_states.resize(cfg.n_paths, dim);
  ens.eps = cfg.eps;
  ens.dt = cfg.dt;
  ens.horizon = cfg.horizon;
  ens.seed = cfg.seed;
  ens.moment_times.push_back(0.0);
  for (long k = 1; k <= n_steps; ++k)
    if (k % stride == 0 || k == n_steps) ens.moment_times.push_back(k * cfg.dt);
  const size_t n_times = ens.moment_times.size();
  std::vector<double> moment_slab(static_cast<size_t>(cfg.n_paths) * n_times);

  auto run_path = [&](int path) {
    rng::Philox gen(cfg.seed, static_cast<std::uint64_t>(path));
    NormalSource normal(gen);

    VectorXd x = x_start0;
    if (cfg.init.kind == InitSpec::Kind::Mu0Gaussian) {
      VectorXd xi(dim);
      for (int d = 0; d < dim; ++d) xi[d] = normal();
      x = mu0_chol * xi;
    }
    for (long k = 0; k < burn_steps; ++k) {
      VectorXd drift = m.b(x) - m.grad_V(x);
      for (int d = 0; d < dim; ++d) x[d] += drift[d] * cfg.dt + root_noise * normal();
      if (x.norm() > blow_r)
        throw Blowup("path " + std::to_string(path) + " exceeded 100 x check_radius in burn-in");
    }

    const VectorXd x_start = x;
    double s_ito = 0.0, s_strat = 0.0;
    size_t check = 0;
    moment_slab[static_cast<size_t>(path) * n_times + check++] = x.squaredNorm();
    VectorXd xi(dim), x_new(dim), x_mid(dim);
    for (long k = 0; k < n_steps; ++k) {
      const VectorXd g = m.grad_V(x);
      const VectorXd bv = m.b(x);
      for (int d = 0; d < dim; ++d) xi[d] = normal();
      x_new = x + (bv - g) * cfg.dt + root_noise * xi;

      s_ito += ((bv.squaredNorm() - bv.dot(g)) / cfg.eps + m.div_b(x)) * cfg.dt +
               ito_noise * bv.dot(xi);
      x_mid = 0.5 * (x + x_new);
      s_strat += m.b(x_mid).dot(x_new - x) / cfg.eps;

      x = x_new;
      if (x.norm() > blow_r)
        throw Blowup("path " + std::to_string(path) + " exceeded 100 x check_radius at t = " +
                     std::to_string((k + 1) * cfg.dt));
      if ((k + 1) % stride == 0 || k + 1 == n_steps) {
        if (check < n_times) moment_slab[static_cast<size_t>(path) * n_times + check++] = x.squaredNorm();
      }
    }

    if (cfg.g) {
      const double boundary = std::log(cfg.g(x_start)) - std::log(cfg.g(x));
      s_ito += boundary;
      s_strat += boundary;
    }
    ens.samples[path] = s_ito;
    ens.strat_samples[path] = s_strat;
    ens.final_states.row(path) = x.transpose();
  };

  const int n_threads = std::min(resolve_threads(cfg.threads), cfg.n_paths);
  if (n_threads <= 1) {
    for (int p = 0; p < cfg.n_paths; ++p) run_path(p);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (int p = t; p < cfg.n_paths; p += n_threads) run_path(p);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // moment means reduced in path order, identical for any worker count
  ens.moment_means.assign(n_times, 0.0);
  for (int p = 0; p < cfg.n_paths; ++p)
    for (size_t c = 0; c < n_times; ++c)
      ens.moment_means[c] += moment_slab[static_cast<size_t>(p) * n_times + c];
  for (auto& v : ens.moment_means) v /= cfg.n_paths;
  return ens;
}

MeanEstimate estimate_mean_ep(const EpEnsemble& ens) {
  const size_t n = ens.samples.size();
  if (n < 2) throw InvalidParams("estimate_mean_ep: need at least 2 paths");
  double mean = 0.0;
  for (double s : ens.samples) mean += s / ens.horizon;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double s : ens.samples) {
    const double d = s / ens.horizon - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

double second_moment(const EpEnsemble& ens) {
  double acc = 0.0;
  for (long p = 0; p < ens.final_states.rows(); ++p) acc += ens.final_states.row(p).squaredNorm();
  return acc / static_cast<double>(ens.final_states.rows());
}

double estimate_mean_ep_stationary(const model::DriftModel& m, double eps, double t_long,
                                   double dt, std::uint64_t seed, double t_burn) {
  if (t_burn < 10.0) throw InvalidParams("estimate_mean_ep_stationary: burn-in must be >= 10");
  rng::Philox gen(seed, 0);
  NormalSource normal(gen);
  const int dim = m.dim;
  const double root_noise = std::sqrt(2.0 * eps * dt);
  const double blow_r = 100.0 * m.check_radius;
  VectorXd x = VectorXd::Zero(dim);
  const long burn_steps = std::lround(t_burn / dt);
  const long steps = std::lround(t_long / dt);
  double acc = 0.0;
  for (long k = 0; k < burn_steps + steps; ++k) {
    const VectorXd g = m.grad_V(x);
    const VectorXd bv = m.b(x);
    if (k >= burn_steps) acc += (bv.squaredNorm() - bv.dot(g)) / eps + m.div_b(x);
    for (int d = 0; d < dim; ++d) x[d] += (bv[d] - g[d]) * dt + root_noise * normal();
    if (x.norm() > blow_r) throw Blowup("stationary estimator exceeded 100 x check_radius");
  }
  return acc / static_cast<double>(steps);
}

std::vector<MgfEstimate> estimate_mgf(const EpEnsemble& ens, const std::vector<double>& alphas) {
  const size_t n = ens.samples.size();
  if (n < 2) throw InvalidParams("estimate_mgf: need at least 2 paths");
  std::vector<MgfEstimate> out;
  out.reserve(alphas.size());
  std::vector<double> w(n);
  for (double alpha : alphas) {
    if (alpha < 0.0 || alpha > 1.0)
      std::fprintf(stderr,
                   "# warning: MGF estimate at alpha = %g outside [0, 1]; "
                   "exponential-estimator variance may be severe\n",
                   alpha);
    // log-sum-exp with the max shifted out
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) mx = std::max(mx, -alpha * ens.samples[i]);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      w[i] = std::exp(-alpha * ens.samples[i] - mx);
      sum += w[i];
    }
    const double log_mean = mx + std::log(sum / static_cast<double>(n));

    double max_w = 0.0;
    for (size_t i = 0; i < n; ++i) max_w = std::max(max_w, w[i]);
    const double max_fraction = max_w / sum;

    // jackknife over the log of the leave-one-out means
    double jk_mean = 0.0;
    std::vector<double> theta(n);
    for (size_t i = 0; i < n; ++i) {
      theta[i] = mx + std::log((sum - w[i]) / static_cast<double>(n - 1));
      jk_mean += theta[i];
    }
    jk_mean /= static_cast<double>(n);
    double jk_var = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double d = theta[i] - jk_mean;
      jk_var += d * d;
    }
    jk_var *= static_cast<double>(n - 1) / static_cast<double>(n);

    MgfEstimate est;
    est.alpha = alpha;
    est.log_rate = log_mean / ens.horizon;
    est.se = std::sqrt(jk_var) / ens.horizon;
    est.max_weight_fraction = max_fraction;
    est.degenerate = max_fraction > 0.5;
    if (est.degenerate)
      std::fprintf(stderr,
                   "# warning: MGF estimate at alpha = %g dominated by one path "
                   "(%.1f%% of the mass); unreliable\n",
                   alpha, 100.0 * max_fraction);
    out.push_back(est);
  }
  return out;
}

std::vector<HistRow> tail_histogram(const EpEnsemble& ens, int bins) {
  if (bins < 1) throw InvalidParams("tail_histogram: need at least one bin");
  const size_t n = ens.samples.size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double s : ens.samples) {
    lo = std::min(lo, s / ens.horizon);
    hi = std::max(hi, s / ens.horizon);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  const double width = (hi - lo) / bins;
  std::vector<long> counts(bins, 0);
  for (double s : ens.samples) {
    int k = static_cast<int>((s / ens.horizon - lo) / width);
    counts[std::clamp(k, 0, bins - 1)]++;
  }
  std::vector<HistRow> rows;
  for (int k = 0; k < bins; ++k) {
    if (counts[k] == 0) continue;
    const double freq = static_cast<double>(counts[k]) / static_cast<double>(n);
    rows.push_back({lo + (k + 0.5) * width, -std::log(freq) / ens.horizon, counts[k]});
  }
  return rows;
}

}  // namespace epflow::montecarlo
