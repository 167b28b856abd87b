#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "epflow/config.hpp"
#include "epflow/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"epflow: entropy production rate functions of nonequilibrium diffusions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;

  const char* names[] = {"rate", "spectrum", "sweep", "simulate", "mgf-check", "admissible"};
  const char* briefs[] = {"semiclassical cgf and rate function",
                          "grid-spectral leading eigenvalue",
                          "eigenvalue sweep over a decreasing eps list",
                          "SDE ensemble and entropy production estimates",
                          "Monte Carlo MGF against the Feynman-Kac route",
                          "admissibility raster for (alpha, p) pairs"};
  CLI::Option *seed_opt = nullptr, *threads_opt = nullptr;
  for (int i = 0; i < 6; ++i) {
    auto* sub = app.add_subcommand(names[i], briefs[i]);
    sub->add_option("--config", config_path, "config file path")->required();
    sub->add_option("--out", out_dir, "output directory (default .)");
    auto* s = sub->add_option("--seed", seed, "override the configured RNG seed");
    auto* t = sub->add_option("--threads", threads, "worker threads (or EPFLOW_THREADS)");
    sub->callback([&seed_opt, &threads_opt, s, t] {
      seed_opt = s;
      threads_opt = t;
    });
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    epflow::cli::RunConfig cfg = epflow::cli::parse_config(config_path);
    if (cfg.command != command)
      throw epflow::ValidationError("config declares command [" + cfg.command +
                                    "] but the CLI invoked '" + command + "'");
    epflow::cli::RunOverrides ov;
    ov.out_dir = out_dir;
    if (seed_opt && seed_opt->count() > 0) ov.seed = seed;
    if (threads_opt && threads_opt->count() > 0) ov.threads = threads;
    epflow::cli::run(cfg, ov);
  } catch (const epflow::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const epflow::NumericalError& e) {
    std::fprintf(stderr, "numerical guard: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
