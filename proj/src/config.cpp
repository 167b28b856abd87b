#include "epflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "epflow/errors.hpp"

namespace epflow::cli {

namespace {

struct Entry {
  std::string value;
  int line;
};

struct Section {
  std::string name;
  int line;
  std::vector<std::pair<std::string, Entry>> entries;
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<Section> tokenize(const std::string& text) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", lineno);
      sections.push_back({trim(line.substr(1, line.size() - 2)), lineno, {}});
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    if (sections.empty()) throw ParseError("key/value pair before any [section]", lineno);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", lineno);
    sections.back().entries.emplace_back(key, Entry{value, lineno});
  }
  return sections;
}

double to_double(const Entry& e) {
  try {
    size_t pos = 0;
    double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ParseError("expected a number, got '" + e.value + "'", e.line);
  }
}

int to_int(const Entry& e) {
  try {
    size_t pos = 0;
    long v = std::stol(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return static_cast<int>(v);
  } catch (...) {
    throw ParseError("expected an integer, got '" + e.value + "'", e.line);
  }
}

std::uint64_t to_u64(const Entry& e) {
  try {
    size_t pos = 0;
    unsigned long long v = std::stoull(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ParseError("expected an unsigned integer, got '" + e.value + "'", e.line);
  }
}

std::vector<double> to_list(const Entry& e) {
  std::string s = e.value;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw ParseError("expected a list of numbers, got '" + e.value + "'", e.line);
  return out;
}

Eigen::MatrixXd to_matrix(const Entry& e) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(e.value);
  std::string part;
  while (std::getline(in, part, ';')) {
    std::string s = part;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream rin(s);
    std::vector<double> row;
    double v;
    while (rin >> v) row.push_back(v);
    if (row.empty() || !rin.eof())
      throw ParseError("expected 'a b ; c d' matrix rows, got '" + e.value + "'", e.line);
    rows.push_back(row);
  }
  if (rows.empty()) throw ParseError("empty matrix", e.line);
  Eigen::MatrixXd mat(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ParseError("ragged matrix rows", e.line);
    for (size_t j = 0; j < rows[i].size(); ++j) mat(i, j) = rows[i][j];
  }
  return mat;
}

InitSection to_init(const Entry& e) {
  InitSection init;
  const std::string& v = e.value;
  if (v == "mu0") {
    init.kind = "mu0";
    return init;
  }
  size_t colon = v.find(':');
  std::string head = colon == std::string::npos ? v : v.substr(0, colon);
  std::string tail = colon == std::string::npos ? "" : v.substr(colon + 1);
  if (head == "point") {
    init.kind = "point";
    if (!tail.empty()) init.x0 = to_list(Entry{tail, e.line});
    return init;
  }
  if (head == "burn_in") {
    init.kind = "burn_in";
    if (!tail.empty()) init.t_burn = to_double(Entry{tail, e.line});
    return init;
  }
  throw ParseError("init must be point[:x,y], burn_in[:T] or mu0, got '" + v + "'", e.line);
}

void reject_unknown(const Section& sec, const std::set<std::string>& known) {
  for (const auto& [key, entry] : sec.entries)
    if (!known.count(key))
      throw ValidationError("unknown key '" + key + "' in section [" + sec.name + "] (line " +
                            std::to_string(entry.line) + ")");
}

const Entry* find(const Section& sec, const std::string& key) {
  const Entry* out = nullptr;
  for (const auto& [k, entry] : sec.entries)
    if (k == key) out = &entry;  // last assignment wins
  return out;
}

ModelSection parse_model(const Section& sec) {
  reject_unknown(sec, {"name", "omega", "beta", "c", "bm", "check_radius", "taper_radius"});
  ModelSection m;
  const Entry* name = find(sec, "name");
  if (!name) throw ValidationError("[model] requires a 'name' key");
  m.name = name->value;
  if (m.name != "rotation" && m.name != "linear" && m.name != "twowell")
    throw ValidationError("model name must be rotation, linear or twowell; got '" + m.name + "'");
  if (const Entry* e = find(sec, "omega")) m.omega = to_double(*e);
  if (const Entry* e = find(sec, "beta")) m.beta = to_double(*e);
  if (const Entry* e = find(sec, "check_radius")) m.check_radius = to_double(*e);
  if (const Entry* e = find(sec, "taper_radius")) m.taper_radius = to_double(*e);
  if (m.name == "linear") {
    const Entry* c = find(sec, "c");
    const Entry* bm = find(sec, "bm");
    if (!c || !bm) throw ValidationError("linear model requires 'c' and 'bm' matrices");
    m.C = to_matrix(*c);
    m.Bm = to_matrix(*bm);
  }
  return m;
}

RateParams parse_rate(const Section& sec) {
  reject_unknown(sec, {"alpha_points", "sigma_fill", "n_samples", "seed", "out_cgf", "out_rate"});
  RateParams p;
  if (const Entry* e = find(sec, "alpha_points")) p.alpha_points = to_int(*e);
  if (const Entry* e = find(sec, "sigma_fill")) p.sigma_fill = to_int(*e);
  if (const Entry* e = find(sec, "n_samples")) p.n_samples = to_int(*e);
  if (const Entry* e = find(sec, "seed")) p.seed = to_u64(*e);
  if (const Entry* e = find(sec, "out_cgf")) p.out_cgf = e->value;
  if (const Entry* e = find(sec, "out_rate")) p.out_rate = e->value;
  return p;
}

SpectrumParams parse_spectrum(const Section& sec) {
  reject_unknown(sec, {"alpha", "eps", "n", "box_lo", "box_hi", "tol", "max_iter", "out",
                       "out_eigvec"});
  SpectrumParams p;
  if (const Entry* e = find(sec, "alpha")) p.alpha = to_double(*e);
  if (const Entry* e = find(sec, "eps")) p.eps = to_double(*e);
  if (const Entry* e = find(sec, "n")) p.n = to_int(*e);
  if (const Entry* e = find(sec, "box_lo")) p.box_lo = to_double(*e);
  if (const Entry* e = find(sec, "box_hi")) p.box_hi = to_double(*e);
  if (const Entry* e = find(sec, "tol")) p.tol = to_double(*e);
  if (const Entry* e = find(sec, "max_iter")) p.max_iter = to_int(*e);
  if (const Entry* e = find(sec, "out")) p.out = e->value;
  if (const Entry* e = find(sec, "out_eigvec")) p.out_eigvec = e->value;
  return p;
}

SweepParams parse_sweep(const Section& sec) {
  reject_unknown(sec, {"alpha", "eps_list", "min_n", "out"});
  SweepParams p;
  if (const Entry* e = find(sec, "alpha")) p.alpha = to_double(*e);
  if (const Entry* e = find(sec, "eps_list")) p.eps_list = to_list(*e);
  if (const Entry* e = find(sec, "min_n")) p.min_n = to_int(*e);
  if (const Entry* e = find(sec, "out")) p.out = e->value;
  return p;
}

SimulateParams parse_simulate(const Section& sec) {
  reject_unknown(sec, {"eps", "dt", "horizon", "n_paths", "seed", "init", "alphas", "bins",
                       "out_paths", "out_summary", "out_hist"});
  SimulateParams p;
  if (const Entry* e = find(sec, "eps")) p.eps = to_double(*e);
  if (const Entry* e = find(sec, "dt")) p.dt = to_double(*e);
  if (const Entry* e = find(sec, "horizon")) p.horizon = to_double(*e);
  if (const Entry* e = find(sec, "n_paths")) p.n_paths = to_int(*e);
  if (const Entry* e = find(sec, "seed")) p.seed = to_u64(*e);
  if (const Entry* e = find(sec, "init")) p.init = to_init(*e);
  if (const Entry* e = find(sec, "alphas")) p.alphas = to_list(*e);
  if (const Entry* e = find(sec, "bins")) p.bins = to_int(*e);
  if (const Entry* e = find(sec, "out_paths")) p.out_paths = e->value;
  if (const Entry* e = find(sec, "out_summary")) p.out_summary = e->value;
  if (const Entry* e = find(sec, "out_hist")) p.out_hist = e->value;
  return p;
}

MgfCheckParams parse_mgf_check(const Section& sec) {
  reject_unknown(sec, {"eps", "t", "dt", "fk_dt", "n_paths", "seed", "init", "alphas", "n",
                       "out"});
  MgfCheckParams p;
  if (const Entry* e = find(sec, "eps")) p.eps = to_double(*e);
  if (const Entry* e = find(sec, "t")) p.t = to_double(*e);
  if (const Entry* e = find(sec, "dt")) p.dt = to_double(*e);
  if (const Entry* e = find(sec, "fk_dt")) p.fk_dt = to_double(*e);
  if (const Entry* e = find(sec, "n_paths")) p.n_paths = to_int(*e);
  if (const Entry* e = find(sec, "seed")) p.seed = to_u64(*e);
  if (const Entry* e = find(sec, "init")) p.init = to_init(*e);
  if (const Entry* e = find(sec, "alphas")) p.alphas = to_list(*e);
  if (const Entry* e = find(sec, "n")) p.n = to_int(*e);
  if (const Entry* e = find(sec, "out")) p.out = e->value;
  return p;
}

AdmissibleParams parse_admissible(const Section& sec) {
  reject_unknown(sec, {"k_b", "h_b", "alpha_lo", "alpha_hi", "p_lo", "p_hi", "resolution",
                       "out"});
  AdmissibleParams p;
  if (const Entry* e = find(sec, "k_b")) p.k_b = to_double(*e);
  if (const Entry* e = find(sec, "h_b")) p.h_b = to_double(*e);
  if (const Entry* e = find(sec, "alpha_lo")) p.alpha_lo = to_double(*e);
  if (const Entry* e = find(sec, "alpha_hi")) p.alpha_hi = to_double(*e);
  if (const Entry* e = find(sec, "p_lo")) p.p_lo = to_double(*e);
  if (const Entry* e = find(sec, "p_hi")) p.p_hi = to_double(*e);
  if (const Entry* e = find(sec, "resolution")) p.resolution = to_int(*e);
  if (const Entry* e = find(sec, "out")) p.out = e->value;
  return p;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  const auto sections = tokenize(text);
  const std::set<std::string> commands = {"rate",     "spectrum",  "sweep",
                                          "simulate", "mgf-check", "admissible"};
  RunConfig cfg;
  bool have_model = false, have_command = false;
  for (const auto& sec : sections) {
    if (sec.name == "model") {
      if (have_model)
        throw ValidationError("duplicate [model] section (line " + std::to_string(sec.line) + ")");
      cfg.model = parse_model(sec);
      have_model = true;
      continue;
    }
    if (!commands.count(sec.name))
      throw ValidationError("unknown section [" + sec.name + "] (line " +
                            std::to_string(sec.line) + ")");
    if (have_command)
      throw ValidationError("more than one command section; found [" + sec.name + "] (line " +
                            std::to_string(sec.line) + ")");
    have_command = true;
    cfg.command = sec.name;
    if (sec.name == "rate")
      cfg.params = parse_rate(sec);
    else if (sec.name == "spectrum")
      cfg.params = parse_spectrum(sec);
    else if (sec.name == "sweep")
      cfg.params = parse_sweep(sec);
    else if (sec.name == "simulate")
      cfg.params = parse_simulate(sec);
    else if (sec.name == "mgf-check")
      cfg.params = parse_mgf_check(sec);
    else
      cfg.params = parse_admissible(sec);
  }
  if (!have_model) throw ValidationError("missing [model] section");
  if (!have_command) throw ValidationError("missing command section");
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace epflow::cli
