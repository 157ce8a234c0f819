#include "rcwalk/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rcwalk {

namespace {

const std::set<std::string> kKnownKeys = {
    "dim", "seed", "model",
    "law", "law.value", "law.lo", "law.hi", "law.shape", "law.big", "law.p",
    "btm.a",
    "site.law", "site.value", "site.lo", "site.hi", "site.shape", "site.big", "site.p",
    "walk.start", "walk.stop", "walk.replicas", "walk.budget",
    "analysis.alpha", "analysis.n_min", "analysis.n_max", "analysis.eps",
    "wiener.n_max", "wiener.tol",
    "set.beta", "set.shells",
    "green.radius", "green.tol",
    "checks.heat.replicas", "checks.maximal.replicas", "checks.sojourn.replicas",
    "checks.lil.replicas", "checks.slln.trials",
    "out", "threads",
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) + " is not key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!kKnownKeys.count(key)) throw std::runtime_error("config: unknown key '" + key + "'");
  kv_[key] = value;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  return std::stoll(it->second);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  return std::stod(it->second);
}

ConductanceLaw Config::law_from(const std::string& prefix) const {
  const std::string kind = get(prefix, "constant");
  if (kind == "constant") return ConductanceLaw::constant(get_double(prefix + ".value", 1.0));
  if (kind == "uniform")
    return ConductanceLaw::uniform(get_double(prefix + ".lo", 1.0), get_double(prefix + ".hi", 5.0));
  if (kind == "pareto") return ConductanceLaw::pareto(get_double(prefix + ".shape", 0.5));
  if (kind == "twopoint")
    return ConductanceLaw::two_point(get_double(prefix + ".big", 1e6), get_double(prefix + ".p", 0.5));
  throw std::runtime_error("config: unknown law '" + kind + "'");
}

Environment Config::environment() const {
  const std::string model = get("model", "rcm");
  if (model == "rcm") return Environment::rcm(dim(), seed(), law_from("law"));
  if (model == "btm") return Environment::btm(dim(), seed(), get_double("btm.a", 0.5), law_from("site"));
  throw std::runtime_error("config: model must be rcm or btm");
}

LatticePoint Config::start() const {
  LatticePoint p(dim());
  const std::string s = get("walk.start", "");
  if (s.empty()) return p;
  std::istringstream in(s);
  std::string tok;
  int i = 0;
  while (std::getline(in, tok, ',')) {
    if (i >= dim()) throw std::runtime_error("config: walk.start has too many coordinates");
    p[i++] = static_cast<Coord>(std::stol(trim(tok)));
  }
  if (i != dim()) throw std::runtime_error("config: walk.start has too few coordinates");
  return p;
}

StopRule Config::stop_rule() const {
  const std::string s = get("walk.stop", "exitcube:" + std::to_string(n_max()));
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw std::runtime_error("config: walk.stop must be kind:value");
  const std::string kind = s.substr(0, colon), val = s.substr(colon + 1);
  if (kind == "exitcube") return StopRule::exit_cube(std::stoi(val));
  if (kind == "horizon") return StopRule::at_horizon(std::stod(val));
  if (kind == "maxjumps") return StopRule::max_jumps(std::stoull(val));
  throw std::runtime_error("config: unknown stop rule '" + kind + "'");
}

std::vector<double> Config::alpha_grid() const {
  const std::string s = get("analysis.alpha", "1.0:3.0:0.25");
  std::vector<double> grid;
  if (s.find(':') != std::string::npos) {
    std::istringstream in(s);
    std::string lo, hi, step;
    std::getline(in, lo, ':');
    std::getline(in, hi, ':');
    std::getline(in, step, ':');
    const double a = std::stod(lo), b = std::stod(hi), st = std::stod(step);
    if (st <= 0 || b < a) throw std::runtime_error("config: bad analysis.alpha range");
    for (double v = a; v <= b + 1e-12; v += st) grid.push_back(v);
  } else {
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) grid.push_back(std::stod(trim(tok)));
  }
  if (grid.size() < 2) throw std::runtime_error("config: alpha grid needs at least two points");
  return grid;
}

void Config::validate() const {
  if (dim() < 1 || dim() > kMaxDim) throw std::runtime_error("config: dim out of range");
  if (replicas() < 1) throw std::runtime_error("config: walk.replicas must be >= 1");
  if (n_max() < n_min() + 3) throw std::runtime_error("config: need analysis.n_max >= analysis.n_min + 3");
  const double e = eps();
  if (e <= 0 || e >= 1) throw std::runtime_error("config: analysis.eps must lie in (0,1)");
  environment();  // law parameters
  alpha_grid();
}

std::string Config::canonical() const {
  std::string s;
  for (const auto& [k, v] : kv_) {  // std::map: already sorted
    s += k;
    s += " = ";
    s += v;
    s += "\n";
  }
  return s;
}

std::uint64_t Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const char c : canonical()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace rcwalk
