#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace epflow::cli {

struct ModelSection {
  std::string name;  // rotation | linear | twowell
  double omega = 1.0;
  double beta = 0.0;
  Eigen::MatrixXd C;   // linear only
  Eigen::MatrixXd Bm;  // linear only
  double check_radius = 3.0;
  double taper_radius = 50.0;
};

struct InitSection {
  std::string kind = "point";  // point | burn_in | mu0
  std::vector<double> x0;
  double t_burn = 10.0;
};

struct RateParams {
  int alpha_points = 201;
  int sigma_fill = 201;
  int n_samples = 4096;
  std::uint64_t seed = 1;
  std::string out_cgf = "cgf.csv";
  std::string out_rate = "rate.csv";
};

struct SpectrumParams {
  double alpha = 0.5;
  double eps = 0.5;
  int n = 0;  // 0 = auto grid
  std::optional<double> box_lo, box_hi;
  double tol = 1e-7;
  int max_iter = 500;
  std::string out = "spectrum.csv";
  std::string out_eigvec;  // empty = no dump
};

struct SweepParams {
  double alpha = 0.25;
  std::vector<double> eps_list = {0.4, 0.2, 0.1, 0.05};
  int min_n = 32;
  std::string out = "sweep.csv";
};

struct SimulateParams {
  double eps = 0.5;
  double dt = 1e-3;
  double horizon = 10.0;
  int n_paths = 1000;
  std::uint64_t seed = 1;
  InitSection init;
  std::vector<double> alphas;  // optional MGF channel
  int bins = 0;                // optional tail histogram
  std::string out_paths = "paths.csv";
  std::string out_summary = "summary.csv";
  std::string out_hist = "hist.csv";
};

struct MgfCheckParams {
  double eps = 0.5;
  double t = 2.0;
  double dt = 1e-3;
  double fk_dt = 1e-3;
  int n_paths = 100000;
  std::uint64_t seed = 1;
  InitSection init;
  std::vector<double> alphas = {0.25, 0.5, 0.75};
  int n = 0;  // 0 = auto grid
  std::string out = "mgf_check.csv";
};

struct AdmissibleParams {
  double k_b = 0.33;
  double h_b = 0.75;
  double alpha_lo = -1.0, alpha_hi = 2.0;
  double p_lo = 1.0, p_hi = 6.0;
  int resolution = 101;
  std::string out = "raster.csv";
};

using CommandParams = std::variant<RateParams, SpectrumParams, SweepParams, SimulateParams,
                                   MgfCheckParams, AdmissibleParams>;

struct RunConfig {
  ModelSection model;
  std::string command;  // rate | spectrum | sweep | simulate | mgf-check | admissible
  CommandParams params;
};

/// Sectioned key/value text. Exactly one command section; unknown keys are
/// rejected by name, malformed lines reported with their line number.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

struct RunOverrides {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

/// Executes the configured command and writes its artifacts. Throws
/// ConfigError subclasses for input problems and NumericalError subclasses
/// for guard trips; the CLI maps these to exit codes 1 and 2.
void run(const RunConfig& cfg, const RunOverrides& ov);

}  // namespace epflow::cli
