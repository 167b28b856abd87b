#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "epflow/model.hpp"

namespace epflow::montecarlo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct InitSpec {
  enum class Kind { Point, BurnIn, Mu0Gaussian } kind = Kind::Point;
  VectorXd x0;           // Point and BurnIn start here (defaults to the origin)
  double t_burn = 10.0;  // BurnIn only
};

struct SimConfig {
  double eps = 0.5;
  double dt = 1e-3;
  double horizon = 10.0;
  int n_paths = 1000;
  std::uint64_t seed = 1;
  InitSpec init;
  std::function<double(const VectorXd&)> g;  // boundary term; empty means g = 1
  int threads = 0;                           // 0 picks hardware concurrency
};

/// Entropy production samples over an ensemble of Euler-Maruyama paths.
/// samples holds the Ito-channel S_t, strat_samples the midpoint-rule values
/// sharing the same noise. Bit-identical for any worker count.
struct EpEnsemble {
  std::vector<double> samples;
  std::vector<double> strat_samples;
  MatrixXd final_states;  // n_paths x dim
  double eps, dt, horizon;
  std::uint64_t seed;
  // ensemble mean of |X|^2 at checkpoint times, for the moment diagnostics
  std::vector<double> moment_times;
  std::vector<double> moment_means;
};

struct MeanEstimate {
  double value;
  double se;
};

struct MgfEstimate {
  double alpha;
  double log_rate;  // log of the ensemble mean of exp(-a S_t), divided by t
  double se;        // jackknife error of the same quantity
  bool degenerate;  // one path carries more than half the exponential mass
  double max_weight_fraction;
};

EpEnsemble simulate(const model::DriftModel& m, const SimConfig& cfg);

MeanEstimate estimate_mean_ep(const EpEnsemble& ens);

/// Diagnostic E|X_t|^2 at the final time.
double second_moment(const EpEnsemble& ens);

/// Ergodic time average of eps^-1(|b|^2 - <b, grad V>) + div b along one long
/// trajectory after a burn-in of at least 10 time units.
double estimate_mean_ep_stationary(const model::DriftModel& m, double eps, double t_long,
                                   double dt, std::uint64_t seed, double t_burn = 10.0);

std::vector<MgfEstimate> estimate_mgf(const EpEnsemble& ens, const std::vector<double>& alphas);

struct HistRow {
  double midpoint;
  double rate_proxy;  // -(1/t) log of the bin frequency, diagnostic only
  long count;
};

std::vector<HistRow> tail_histogram(const EpEnsemble& ens, int bins);

}  // namespace epflow::montecarlo
