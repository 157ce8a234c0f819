// Command-line driver: simulation, dimension/hitting experiments, potential
// theory, statistical checks. See README for the config schema and outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "rcwalk/fractal.hpp"
#include "rcwalk/harness/checks.hpp"
#include "rcwalk/harness/config.hpp"
#include "rcwalk/harness/experiments.hpp"
#include "rcwalk/harness/report.hpp"
#include "rcwalk/potential.hpp"
#include "rcwalk/walk.hpp"

using json = nlohmann::json;
using namespace rcwalk;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  std::int64_t replicas = -1;
  std::int64_t threads = -1;
};

Config load_config(const GlobalArgs& g) {
  Config cfg = g.config_path.empty() ? Config{} : Config::from_file(g.config_path);
  if (g.seed >= 0) cfg.set("seed", std::to_string(g.seed));
  if (g.replicas >= 0) cfg.set("walk.replicas", std::to_string(g.replicas));
  if (g.threads >= 0) cfg.set("threads", std::to_string(g.threads));
  if (!g.out_dir.empty()) cfg.set("out", g.out_dir);
  return cfg;
}

void write_provenance(const Config& cfg) {
  ensure_dir(cfg.out_dir());
  write_text_file(cfg.out_dir() + "/provenance.txt", provenance_block(cfg));
}

std::vector<std::string> point_header(const char* tag, int d) {
  std::vector<std::string> h;
  for (int i = 0; i < d; ++i) h.push_back(std::string(tag) + std::to_string(i));
  return h;
}

std::vector<LatticePoint> parse_points(const std::string& spec, int d) {
  // "1,2,3; 4,5,6; ..."
  std::vector<LatticePoint> pts;
  std::istringstream in(spec);
  std::string tok;
  while (std::getline(in, tok, ';')) {
    std::istringstream pin(tok);
    std::string c;
    LatticePoint p(d);
    int i = 0;
    while (std::getline(pin, c, ',')) {
      if (i >= d) throw std::runtime_error("point has too many coordinates: " + tok);
      p[i++] = static_cast<Coord>(std::stol(c));
    }
    if (i != d) throw std::runtime_error("point has too few coordinates: " + tok);
    pts.push_back(p);
  }
  return pts;
}

std::vector<LatticePoint> read_points_csv(const std::string& path, int d) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<LatticePoint> pts;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {  // tolerate a header row
      first = false;
      if (!line.empty() && !(std::isdigit(line[0]) || line[0] == '-')) continue;
    }
    if (line.empty()) continue;
    std::istringstream pin(line);
    std::string c;
    LatticePoint p(d);
    int i = 0;
    while (std::getline(pin, c, ',') && i < d) p[i++] = static_cast<Coord>(std::stol(c));
    if (i == d) pts.push_back(p);
  }
  return pts;
}

int cmd_simulate(const Config& cfg, bool dump_trajectory) {
  cfg.validate();
  const Environment env = cfg.environment();
  const int d = env.dim();
  write_provenance(cfg);

  json summary;
  summary["environment"] = env.describe();
  summary["replicas"] = cfg.replicas();

  std::vector<std::string> full_header = {"replica", "shell"};
  std::vector<std::string> skel_header = full_header;
  for (const auto& h : point_header("x", d)) {
    full_header.push_back(h);
    skel_header.push_back(h);
  }
  CsvWriter full_csv(cfg.out_dir() + "/range_full.csv", full_header);
  CsvWriter skel_csv(cfg.out_dir() + "/range_skeleton.csv", skel_header);

  for (int r = 0; r < cfg.replicas(); ++r) {
    RngStream rng = RngStream::from(cfg.seed(), 0x73696d75ULL, static_cast<std::uint64_t>(r));
    json rep;
    RangeSet range(d);
    if (dump_trajectory) {
      const Trajectory traj = simulate(env, cfg.start(), cfg.stop_rule(), rng);
      std::vector<std::string> th = {"jump"};
      for (const auto& h : point_header("x", d)) th.push_back(h);
      th.push_back("vsrw_time");
      th.push_back("csrw_time");
      CsvWriter tcsv(cfg.out_dir() + "/trajectory_" + std::to_string(r) + ".csv", th);
      for (std::size_t i = 0; i < traj.positions.size(); ++i) {
        std::vector<std::string> row = {std::to_string(i)};
        for (int k = 0; k < d; ++k) row.push_back(std::to_string(traj.positions[i][k]));
        row.push_back(fmt_double(traj.vsrw_times[i]));
        row.push_back(fmt_double(traj.csrw_times[i]));
        tcsv.row(row);
      }
      range = record_range(traj);
      rep["jumps"] = traj.jumps();
      rep["stop_time_vsrw"] = traj.stop_time;
    } else {
      RangeAccumulator acc(d);
      WalkOptions opt;
      opt.effort_budget = static_cast<std::uint64_t>(cfg.get_int("walk.budget", std::int64_t{1} << 32));
      const WalkResult res = run_walk(env, cfg.start(), cfg.stop_rule(), rng, acc, opt);
      range = acc.take();
      rep["jumps"] = res.physical_jumps;
      rep["stop_time_vsrw"] = res.t_vsrw;
      rep["stop_time_csrw"] = res.t_csrw;
      rep["excursion_blocks"] = res.blocks;
    }
    for (int n = 1; n <= range.max_shell(); ++n) {
      for (const auto& p : range.full_points(n)) {
        std::vector<std::string> row = {std::to_string(r), std::to_string(n)};
        for (int k = 0; k < d; ++k) row.push_back(std::to_string(p[k]));
        full_csv.row(row);
      }
      for (const auto& p : range.skeleton_points(n)) {
        std::vector<std::string> row = {std::to_string(r), std::to_string(n)};
        for (int k = 0; k < d; ++k) row.push_back(std::to_string(p[k]));
        skel_csv.row(row);
      }
    }
    rep["full_range_size"] = range.full_size();
    rep["skeleton_range_size"] = range.skeleton_size();
    summary["walks"].push_back(rep);
  }
  write_text_file(cfg.out_dir() + "/simulate_summary.json", summary.dump(2) + "\n");
  std::cout << "simulate: wrote " << cfg.out_dir() << "/range_full.csv and simulate_summary.json\n";
  return 0;
}

int cmd_dimension(const Config& cfg) {
  const DimensionReport rep = run_dimension(cfg);
  write_provenance(cfg);
  CsvWriter csv(cfg.out_dir() + "/dimension_values.csv", {"replica", "alpha", "shell", "nu", "tau"});
  for (const auto& row : rep.rows)
    csv.row({std::to_string(row.replica), fmt_double(row.alpha), std::to_string(row.shell), fmt_double(row.nu),
             fmt_double(row.tau)});
  json j;
  j["alpha_hausdorff"] = rep.alpha_h;
  j["alpha_packing"] = rep.alpha_p;
  j["mean_alpha_hausdorff"] = rep.mean_h.mean;
  j["stderr_alpha_hausdorff"] = rep.mean_h.stderr_of_mean;
  j["mean_alpha_packing"] = rep.mean_p.mean;
  j["stderr_alpha_packing"] = rep.mean_p.stderr_of_mean;
  j["jumps"] = rep.jumps;
  j["runtime_s"] = rep.runtime_s;
  write_text_file(cfg.out_dir() + "/dimension_summary.json", j.dump(2) + "\n");
  std::printf("dimension: alpha_H = %.3f +- %.3f, alpha_P = %.3f +- %.3f (%d replicas, %.1f s)\n",
              rep.mean_h.mean, rep.mean_h.stderr_of_mean, rep.mean_p.mean, rep.mean_p.stderr_of_mean,
              static_cast<int>(rep.alpha_h.size()), rep.runtime_s);
  return 0;
}

int cmd_capacity(const Config& cfg, const std::string& points, const std::string& points_file, int radius,
                 int mesh) {
  const Environment env = cfg.environment();
  const int d = env.dim();
  std::vector<LatticePoint> pts =
      !points.empty() ? parse_points(points, d) : read_points_csv(points_file, d);
  GreenSolveConfig gcfg;
  gcfg.radius = radius;
  gcfg.tol = cfg.get_double("green.tol", 1e-10);
  const CapacityResult res = capacity(env, pts, gcfg);

  write_provenance(cfg);
  std::vector<std::string> header;
  for (const auto& h : point_header("x", d)) header.push_back(h);
  for (const auto& h : point_header("y", d)) header.push_back(h);
  header.push_back("g");
  header.push_back("R");
  CsvWriter csv(cfg.out_dir() + "/capacity_green.csv", header);
  for (std::size_t i = 0; i < res.set.size(); ++i)
    for (std::size_t j = 0; j < res.set.size(); ++j) {
      std::vector<std::string> row;
      for (int k = 0; k < d; ++k) row.push_back(std::to_string(res.set[i][k]));
      for (int k = 0; k < d; ++k) row.push_back(std::to_string(res.set[j][k]));
      row.push_back(fmt_double(res.green(i, j)));
      row.push_back(std::to_string(res.radius));
      csv.row(row);
    }

  json j;
  for (const auto& p : res.set) j["set"].push_back(p.str());
  for (int i = 0; i < res.charge.size(); ++i) j["charge"].push_back(res.charge[i]);
  j["cap"] = res.cap;
  j["min_charge"] = res.min_charge;
  j["residual"] = res.residual;
  j["radius"] = res.radius;
  j["negative_charge_warning"] = res.negative_charge;
  if (mesh >= 0) {
    const auto dres = capacity_discrete_approx(env, pts, mesh, gcfg);
    j["discrete_mesh"] = dres.mesh;
    j["discrete_value"] = dres.value;
    j["discrete_mesh_warning"] = dres.mesh_warning;
    j["discrete_monte_carlo"] = dres.monte_carlo;
  }
  write_text_file(cfg.out_dir() + "/capacity.json", j.dump(2) + "\n");
  std::printf("capacity: |A| = %d, cap = %.6f (R = %d)%s\n", static_cast<int>(res.set.size()), res.cap,
              res.radius, res.negative_charge ? " [negative charge warning]" : "");
  return 0;
}

int cmd_wiener(const Config& cfg, double beta, const std::string& points_file) {
  const Environment env = cfg.environment();
  const int d = env.dim();
  const int n_max = static_cast<int>(cfg.get_int("wiener.n_max", 7));
  std::vector<std::vector<LatticePoint>> family;
  if (!points_file.empty()) {
    family.resize(n_max);
    for (const auto& p : read_points_csv(points_file, d)) {
      const int n = shell_index(p);
      if (n >= 1 && n <= n_max) family[n - 1].push_back(p);
    }
  } else {
    family = make_test_set(beta, d, n_max).family(n_max);
  }
  const WienerSeries ws = wiener_series(env, family, cfg.get_double("wiener.tol", 1e-8));

  write_provenance(cfg);
  CsvWriter csv(cfg.out_dir() + "/wiener.csv", {"n", "term", "partial_sum"});
  for (std::size_t i = 0; i < ws.terms.size(); ++i)
    csv.row({std::to_string(i + 1), fmt_double(ws.terms[i]), fmt_double(ws.partials[i])});
  json j;
  j["terms"] = ws.terms;
  j["partials"] = ws.partials;
  j["divergent_like"] = ws.divergent_like;
  j["fitted_ratio"] = ws.fitted_ratio;
  write_text_file(cfg.out_dir() + "/wiener.json", j.dump(2) + "\n");
  std::printf("wiener: %s (fitted ratio %.3f over %d shells)\n",
              ws.divergent_like ? "divergent-like" : "convergent-like", ws.fitted_ratio,
              static_cast<int>(ws.terms.size()));
  return 0;
}

int cmd_hitting(const Config& cfg, double beta) {
  const TestSet set = make_test_set(beta, cfg.dim(), cfg.n_max());
  const HittingReport rep = run_hitting(cfg, set);
  write_provenance(cfg);
  CsvWriter csv(cfg.out_dir() + "/hitting.csv", {"replica", "shell", "hit"});
  for (std::size_t r = 0; r < rep.shell_hit.size(); ++r)
    for (int n = 1; n <= cfg.n_max(); ++n)
      csv.row({std::to_string(r), std::to_string(n), std::to_string(rep.shell_hit[r][n])});
  json j;
  j["beta"] = beta;
  j["last_hit_shell"] = rep.last_hit_shell;
  j["hit_fraction"] = rep.hit_fraction;
  j["classification"] = rep.classification;
  j["wiener_divergent_like"] = rep.wiener.divergent_like;
  j["wiener_fitted_ratio"] = rep.wiener.fitted_ratio;
  j["wiener_terms"] = rep.wiener.terms;
  j["critical_indeterminate"] = rep.critical_indeterminate;
  j["runtime_s"] = rep.runtime_s;
  write_text_file(cfg.out_dir() + "/hitting_summary.json", j.dump(2) + "\n");
  std::printf("hitting: %s\n", rep.classification.c_str());
  return 0;
}

int cmd_make_set(const Config& cfg, double beta, int shells, bool self_check) {
  const int d = cfg.dim();
  const TestSet set = make_test_set(beta, d, shells);
  write_provenance(cfg);
  std::vector<std::string> header = {"shell"};
  for (const auto& h : point_header("x", d)) header.push_back(h);
  CsvWriter csv(cfg.out_dir() + "/set_points.csv", header);
  std::int64_t total = 0;
  for (int n = 1; n <= shells; ++n) {
    for (const auto& p : set.shell_points(n)) {
      std::vector<std::string> row = {std::to_string(n)};
      for (int k = 0; k < d; ++k) row.push_back(std::to_string(p[k]));
      csv.row(row);
      ++total;
    }
  }
  json j;
  j["beta"] = beta;
  j["shells"] = shells;
  j["points"] = total;
  if (self_check) {
    std::vector<LatticePoint> all;
    for (int n = 1; n <= shells; ++n) {
      auto pts = set.shell_points(n);
      all.insert(all.end(), pts.begin(), pts.end());
    }
    std::vector<double> alphas;
    for (double a = 0.25; a <= d + 0.76; a += 0.25) alphas.push_back(a);
    const int n_lo = std::max(2, shells - 5);
    const auto est = dim_estimate(all, alphas, n_lo, shells);
    j["self_check_alpha_hat"] = est.alpha_hat;
    j["self_check_pass"] = std::abs(est.alpha_hat - beta) <= 0.25;
    std::printf("make-set: beta = %.3f, self-check alpha_hat = %.3f\n", beta, est.alpha_hat);
  }
  write_text_file(cfg.out_dir() + "/make_set.json", j.dump(2) + "\n");
  return 0;
}

json report_to_json(const CheckReport& rep) {
  json j;
  j["name"] = rep.name;
  j["pass"] = rep.pass;
  j["samples"] = rep.samples;
  j["runtime_s"] = rep.runtime_s;
  for (const auto& [k, v] : rep.fitted) j["fitted"][k] = v;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

int cmd_checks(const Config& cfg, const std::string& only) {
  const Environment env = cfg.environment();
  const std::uint64_t seed = cfg.seed();
  std::vector<CheckReport> reps;
  auto want = [&](const char* name) { return only.empty() || only == name; };

  if (want("slln"))
    reps.push_back(check_slln(0.5, 1.0, 0.5, 10000,
                              static_cast<int>(cfg.get_int("checks.slln.trials", 100)), seed));
  if (want("heat_kernel"))
    reps.push_back(check_heat_kernel(env, {16, 32, 64, 128},
                                     cfg.get_int("checks.heat.replicas", 200000), seed));
  if (want("maximal"))
    reps.push_back(check_maximal(env, 4096, {1.5, 2.0, 2.5, 3.0},
                                 cfg.get_int("checks.maximal.replicas", 10000), seed));
  if (want("sojourn_tail"))
    reps.push_back(check_sojourn_tail(env, 4, 7, {0.5, 1.0, 1.5, 2.0, 2.5},
                                      cfg.get_int("checks.sojourn.replicas", 72), seed));
  if (want("lil"))
    reps.push_back(check_lil(env, 8, 16, cfg.get_int("checks.lil.replicas", 200), seed));

  write_provenance(cfg);
  json j;
  bool all_pass = true;
  for (const auto& rep : reps) {
    j["checks"].push_back(report_to_json(rep));
    all_pass = all_pass && rep.pass;
    std::printf("check %-12s %s (%.1f s)\n", rep.name.c_str(), rep.pass ? "PASS" : "FAIL", rep.runtime_s);
  }
  write_text_file(cfg.out_dir() + "/checks.json", j.dump(2) + "\n");
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random-conductance walks: ranges, discrete fractal dimensions, potential theory"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "config file (key = value lines)");
  app.add_option("--seed", g.seed, "master seed (overrides config)");
  app.add_option("--replicas", g.replicas, "replica count (overrides config)");
  app.add_option("--out", g.out_dir, "output directory (overrides config)");
  app.add_option("--threads", g.threads, "worker threads (overrides config)");

  auto* sim = app.add_subcommand("simulate", "run walks, dump ranges (and optionally trajectories)");
  bool dump_traj = false;
  sim->add_flag("--dump-trajectory", dump_traj, "write per-jump trajectory CSVs (jump-exact mode)");

  auto* dim = app.add_subcommand("dimension", "estimate discrete Hausdorff/packing dimension of the range");

  auto* cap = app.add_subcommand("capacity", "Green submatrix, equilibrium charge and capacity of a finite set");
  std::string cap_points, cap_file;
  int cap_radius = 16, cap_mesh = -1;
  cap->add_option("--points", cap_points, "inline set: \"x,y,z;x,y,z;...\"");
  cap->add_option("--set-file", cap_file, "CSV of points (one per row)");
  cap->add_option("--radius", cap_radius, "truncation radius R (box V(0,2R))");
  cap->add_option("--mesh", cap_mesh, "also compute the time-discretized capacity at this mesh exponent");

  auto* wie = app.add_subcommand("wiener", "transience series over a shell-indexed set family");
  double wie_beta = 2.0;
  std::string wie_file;
  wie->add_option("--beta", wie_beta, "test-set dimension parameter");
  wie->add_option("--set-file", wie_file, "CSV of points; bucketed by shell");

  auto* hit = app.add_subcommand("hitting", "hit/miss experiment against a test set");
  double hit_beta = 2.0;
  hit->add_option("--beta", hit_beta, "test-set dimension parameter");

  auto* mk = app.add_subcommand("make-set", "emit a test set of prescribed dimension");
  double mk_beta = 2.0;
  int mk_shells = 8;
  bool mk_check = false;
  mk->add_option("--beta", mk_beta, "target dimension in (0, d]");
  mk->add_option("--shells", mk_shells, "number of shells");
  mk->add_flag("--self-check", mk_check, "verify the set's estimated dimension");

  auto* chk = app.add_subcommand("checks", "statistical lemma-level checks");
  std::string chk_only;
  chk->add_option("--only", chk_only, "run a single check: slln, heat_kernel, maximal, sojourn_tail, lil");

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = load_config(g);
    if (sim->parsed()) return cmd_simulate(cfg, dump_traj);
    if (dim->parsed()) return cmd_dimension(cfg);
    if (cap->parsed()) return cmd_capacity(cfg, cap_points, cap_file, cap_radius, cap_mesh);
    if (wie->parsed()) return cmd_wiener(cfg, wie_beta, wie_file);
    if (hit->parsed()) return cmd_hitting(cfg, hit_beta);
    if (mk->parsed()) return cmd_make_set(cfg, mk_beta, mk_shells, mk_check);
    if (chk->parsed()) return cmd_checks(cfg, chk_only);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
