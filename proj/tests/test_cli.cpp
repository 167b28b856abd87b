#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "epflow/config.hpp"
#include "epflow/errors.hpp"

using namespace epflow;
namespace fs = std::filesystem;

namespace {

fs::path make_tmpdir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("epflow_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::path p = dir / name;
  std::ofstream out(p);
  out << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// data rows of a CSV, skipping '#' metadata and the header line
std::vector<std::vector<double>> read_rows(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(EPFLOW_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const char* kRotationRate = R"(# rotation fixture
[model]
name = rotation
omega = 1

[rate]
alpha_points = 201
n_samples = 2048
)";

}  // namespace

TEST_CASE("parse_config_text fills defaults") {
  auto cfg = cli::parse_config_text(kRotationRate);
  CHECK(cfg.model.name == "rotation");
  CHECK(cfg.model.omega == 1.0);
  CHECK(cfg.command == "rate");
  auto& p = std::get<cli::RateParams>(cfg.params);
  CHECK(p.alpha_points == 201);
  CHECK(p.sigma_fill == 201);  // default
  CHECK(p.out_cgf == "cgf.csv");
}

TEST_CASE("config validation errors") {
  SUBCASE("duplicate command sections") {
    CHECK_THROWS_AS(cli::parse_config_text("[model]\nname = rotation\n[rate]\n[sweep]\n"),
                    ValidationError);
  }
  SUBCASE("unknown key is named") {
    try {
      cli::parse_config_text("[model]\nname = rotation\n[simulate]\nepsilonn = 0.5\n");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("epsilonn") != std::string::npos);
    }
  }
  SUBCASE("missing model") {
    CHECK_THROWS_AS(cli::parse_config_text("[rate]\n"), ValidationError);
  }
  SUBCASE("missing command") {
    CHECK_THROWS_AS(cli::parse_config_text("[model]\nname = rotation\n"), ValidationError);
  }
  SUBCASE("bad number carries the line") {
    try {
      cli::parse_config_text("[model]\nname = rotation\nomega = abc\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line == 3);
    }
  }
  SUBCASE("unknown model name") {
    CHECK_THROWS_AS(cli::parse_config_text("[model]\nname = pendulum\n[rate]\n"),
                    ValidationError);
  }
}

TEST_CASE("matrix-valued model section") {
  auto cfg = cli::parse_config_text(
      "[model]\nname = linear\nc = 2 0 ; 0 1\nbm = 0 -0.5 ; 1 0\n[rate]\n");
  CHECK(cfg.model.C.rows() == 2);
  CHECK(cfg.model.C(0, 0) == 2.0);
  CHECK(cfg.model.Bm(0, 1) == -0.5);
}

TEST_CASE("rate command emits closed-form-consistent artifacts") {
  auto dir = make_tmpdir("rate");
  auto cfgpath = write_file(dir, "rate.cfg", kRotationRate);
  cli::RunOverrides ov;
  ov.out_dir = dir.string();
  cli::run(cli::parse_config(cfgpath.string()), ov);

  auto cgf = read_rows(dir / "cgf.csv");
  REQUIRE(cgf.size() == 201);
  for (const auto& row : cgf) {
    REQUIRE(row.size() == 3);
    const double expected = 1.0 - std::sqrt(1.0 + 4.0 * row[0] * (1.0 - row[0]));
    CHECK(std::abs(row[1] - expected) <= 1e-10);
    CHECK(row[2] == 0.0);  // single critical point
  }

  auto rate = read_rows(dir / "rate.csv");
  REQUIRE(!rate.empty());
  double at0 = 1e18, at2 = 1e18;
  for (const auto& row : rate) {
    CHECK(row[1] >= -1e-10);
    if (std::abs(row[0]) < 1e-9) at0 = row[1];
    if (std::abs(row[0] - 2.0) < 0.05) at2 = std::min(at2, row[1]);
  }
  CHECK(at0 == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-9));
  CHECK(at2 <= 1e-6);

  // all metadata lines begin with '#'
  std::istringstream in(slurp(dir / "rate.csv"));
  std::string line;
  int data_or_header = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] != '#') ++data_or_header;
  }
  CHECK(data_or_header == static_cast<int>(rate.size()) + 1);
}

TEST_CASE("rate command handles a gradient system (b = 0) end to end") {
  // h_b_hat = 0 makes the admissible-interval estimate the whole line,
  // clipped to [-1, 2] by the grid builder
  auto dir = make_tmpdir("rate0");
  const char* cfg = R"([model]
name = linear
c = 1 0 ; 0 2
bm = 0 0 ; 0 0

[rate]
alpha_points = 101
n_samples = 512
)";
  auto cfgpath = write_file(dir, "rate0.cfg", cfg);
  cli::RunOverrides ov;
  ov.out_dir = dir.string();
  cli::run(cli::parse_config(cfgpath.string()), ov);
  auto cgf = read_rows(dir / "cgf.csv");
  REQUIRE(cgf.size() == 101);
  for (const auto& row : cgf) {
    CHECK(row[0] >= -1.0 - 1e-12);
    CHECK(row[0] <= 2.0 + 1e-12);
    CHECK(std::abs(row[1]) <= 1e-11);  // e vanishes identically in equilibrium
  }
}

TEST_CASE("simulate is byte-identical across runs with a fixed seed") {
  auto dir = make_tmpdir("sim");
  const char* cfg = R"([model]
name = rotation
omega = 1

[simulate]
eps = 0.5
dt = 1e-2
horizon = 2
n_paths = 50
seed = 99
alphas = 0.25, 0.5
)";
  auto cfgpath = write_file(dir, "sim.cfg", cfg);
  cli::RunOverrides ov;
  ov.out_dir = (dir / "a").string();
  cli::run(cli::parse_config(cfgpath.string()), ov);
  ov.out_dir = (dir / "b").string();
  ov.threads = 3;  // worker count must not matter
  cli::run(cli::parse_config(cfgpath.string()), ov);
  CHECK(slurp(dir / "a" / "paths.csv") == slurp(dir / "b" / "paths.csv"));
  CHECK(slurp(dir / "a" / "summary.csv") == slurp(dir / "b" / "summary.csv"));
}

TEST_CASE("admissible raster artifacts follow the hand-evaluated examples") {
  auto dir = make_tmpdir("adm");
  const char* cfg = R"([model]
name = rotation

[admissible]
k_b = 0.33
h_b = 0.75
alpha_lo = 0
alpha_hi = 2
p_lo = 2
p_hi = 2
resolution = 5
)";
  auto cfgpath = write_file(dir, "adm.cfg", cfg);
  cli::RunOverrides ov;
  ov.out_dir = dir.string();
  cli::run(cli::parse_config(cfgpath.string()), ov);
  auto rows = read_rows(dir / "raster.csv");
  REQUIRE(rows.size() == 25);
  for (const auto& row : rows) {
    if (row[0] == 0.5 && row[1] == 2.0) CHECK(row[2] == 1.0);
    if (row[0] == 2.0 && row[1] == 2.0) CHECK(row[2] == 0.0);
  }
}

TEST_CASE("binary exit codes follow the contract") {
  auto dir = make_tmpdir("exit");
  SUBCASE("0 on success") {
    auto cfgpath = write_file(dir, "ok.cfg",
                              "[model]\nname = rotation\n[admissible]\nresolution = 8\n");
    CHECK(run_binary("admissible --config " + cfgpath.string() + " --out " + dir.string()) == 0);
  }
  SUBCASE("1 on config errors") {
    auto cfgpath = write_file(dir, "bad.cfg", "[model]\nname = rotation\n[rate]\nbogus = 1\n");
    CHECK(run_binary("rate --config " + cfgpath.string()) == 1);
    CHECK(run_binary("rate --config " + (dir / "missing.cfg").string()) == 1);
    // config command and CLI subcommand must agree
    auto okpath = write_file(dir, "ok2.cfg", "[model]\nname = rotation\n[rate]\n");
    CHECK(run_binary("sweep --config " + okpath.string()) == 1);
  }
  SUBCASE("2 on numerical guards") {
    auto cfgpath = write_file(dir, "coarse.cfg", R"([model]
name = rotation

[spectrum]
alpha = 0.5
eps = 0.5
n = 33
box_lo = -5
box_hi = 5
)");
    CHECK(run_binary("spectrum --config " + cfgpath.string() + " --out " + dir.string()) == 2);
  }
}

TEST_CASE("emitted spectrum CSV round-trips") {
  auto dir = make_tmpdir("spec");
  const char* cfg = R"([model]
name = rotation

[spectrum]
alpha = 0.5
eps = 0.5
n = 65
box_lo = -4
box_hi = 4
out_eigvec = psi.csv
)";
  auto cfgpath = write_file(dir, "spec.cfg", cfg);
  cli::RunOverrides ov;
  ov.out_dir = dir.string();
  cli::run(cli::parse_config(cfgpath.string()), ov);
  auto rows = read_rows(dir / "spectrum.csv");
  REQUIRE(rows.size() == 1);
  CHECK(std::abs(rows[0][2] - (1.0 - std::sqrt(2.0))) <= 2e-2);
  auto psi = read_rows(dir / "psi.csv");
  CHECK(psi.size() == 63u * 63u);
  for (const auto& row : psi) CHECK(row[2] > 0.0);
}
