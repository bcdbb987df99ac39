// lsf: command line front end for pool aggregation, conversion, refinement,
// simulation and the desk-scale scaling studies.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lsf/analysis.hpp"
#include "lsf/harness.hpp"
#include "lsf/io.hpp"
#include "lsf/parallel.hpp"
#include "lsf/simkit.hpp"
#include "lsf/targets.hpp"

namespace fs = std::filesystem;
using namespace lsf;

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kConfig = 2, kInfeasible = 3, kNumerical = 4 };

struct Globals {
  std::string config;
  std::optional<long long> seed;
  std::string out;
  int threads = 1;
  bool allow_large = false;
};

struct Run {
  RunConfig cfg;
  fs::path out;
};

Run load(const Globals& g) {
  Json j = g.config.empty() ? Json::object() : read_json(g.config);
  if (!j.is_object()) throw ConfigError("run config: expected a JSON object");
  if (g.seed) j["seed"] = *g.seed;
  if (g.allow_large) j["guards"]["allow_large"] = true;
  Run r{parse_run_config(j), {}};
  r.out = g.out.empty() ? fs::path(r.cfg.output_dir) : fs::path(g.out);
  return r;
}

void header(CsvWriter& csv, const std::string& verb, const RunConfig& cfg) {
  csv.comment("lsf " + verb);
  csv.comment("config_sha256 " + cfg.hash());
  csv.comment("seed " + std::to_string(cfg.seed));
}

std::string bits(int index, int n) {
  std::string s(static_cast<std::size_t>(n), '0');
  for (int q = 0; q < n; ++q)
    if (index & (1 << (n - 1 - q))) s[static_cast<std::size_t>(q)] = '1';
  return s;
}

void say(const std::string& line) { std::cout << line << '\n'; }

// ---------------------------------------------------------------- verbs

void cmd_crystal(const Run& r) {
  const IonCrystal c = make_crystal(r.cfg);
  Json j = crystal_to_json(c);
  j["t_min_s"] = min_gate_time(c);
  j["min_mode_gap_rad_per_s"] = min_mode_gap(c);
  j["sha256"] = crystal_hash(c);
  write_json(r.out / "crystal.json", j);

  CsvWriter csv({"mode", "freq_hz", "lamb_dicke", "com"});
  header(csv, "crystal", r.cfg);
  csv.comment("freq_hz = nu_j / (2 pi)");
  for (int k = 0; k < c.size(); ++k)
    csv.row({fmt(k), fmt(c.mode_freqs(k) / kTwoPi), fmt(c.lamb_dicke(k)), fmt(k == c.com_mode() ? 1 : 0)});
  csv.save(r.out / "modes.csv");
  say("crystal: " + std::to_string(c.size()) + " ions, T_min = " + fmt(min_gate_time(c)) + " s");
}

int cmd_pool(const Run& r) {
  const Setup s = make_setup(r.cfg, r.cfg.crystal.n_ions);
  const SolutionPool pool = make_pool(r.cfg, s.set, r.cfg.ansatz, r.cfg.pool.count, r.cfg.seed, true);
  Json j = pool_to_json(pool);
  j["config_hash"] = r.cfg.hash();
  j["gate_time_s"] = s.gate_time;
  j["t_over_tmin"] = s.gate_time / s.t_min;
  write_json(r.out / "pool.json", j);
  const PoolStats& st = pool.stats;
  std::printf("pool: %zu admitted, %d attempts, %d converged, %d rejected by overlap, success rate %.3f, T/T_min %.3f\n",
              pool.entries.size(), st.attempts, st.converged, st.rejected_overlap, st.success_rate(),
              s.gate_time / s.t_min);
  if (pool.entries.empty()) {
    std::fprintf(stderr, "pool: no zero-phase solution found; try a longer gate time\n");
    return kInfeasible;
  }
  return kOk;
}

void emit_spectrum(const Run& r, const Setup& s, const TargetMatrix& t, const DriveSolution& best) {
  std::vector<bool> coupled(static_cast<std::size_t>(t.size()), false);
  for (int n : t.coupled_set) coupled[static_cast<std::size_t>(n)] = true;
  CsvWriter ions({"ion", "coupled", "amplitude", "rabi_rad_per_s"});
  header(ions, "solve --emit-spectrum", r.cfg);
  ions.comment("amplitude = |r_n| (dimensionless, amplitude x T); rabi_rad_per_s = |r_n| / T");
  ions.comment("target " + t.label);
  for (int n = 0; n < best.ions(); ++n) {
    const double a = best.amplitudes.row(n).norm();
    ions.row({fmt(n), fmt(coupled[static_cast<std::size_t>(n)] ? 1 : 0), fmt(a), fmt(a / s.gate_time)});
  }
  ions.save(r.out / "ion_power.csv");

  CsvWriter tones({"tone", "freq_hz", "harmonic", "mean_rad_per_s", "std_rad_per_s"});
  header(tones, "solve --emit-spectrum", r.cfg);
  tones.comment("per-tone statistics over ions of r_nm / T; freq_hz = omega_m / (2 pi)");
  const ToneGrid& g = *s.set.grid;
  for (int m = 0; m < g.size(); ++m) {
    const Vec col = best.amplitudes.col(m) / s.gate_time;
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    const long h = g.is_harmonic() ? g.harmonics[static_cast<std::size_t>(m)] : -1;
    tones.row({fmt(m), fmt(g.tone_freqs(m) / kTwoPi), fmt(static_cast<long long>(h)), fmt(mean), fmt(std::sqrt(var))});
  }
  tones.save(r.out / "tone_spectrum.csv");
}

int cmd_solve(const Run& r, const std::string& pool_file, int keep, bool spectrum) {
  const Setup s = make_setup(r.cfg, r.cfg.crystal.n_ions);
  const SolutionPool pool = pool_from_json(read_json(pool_file));
  check_provenance("pool file", pool.crystal_hash, pool.grid_hash, s.crystal, *s.set.grid);
  if (pool.ansatz == Ansatz::multi) check_multi_guard(r.cfg, s.crystal.size());
  const TargetMatrix target = parse_target_spec(r.cfg.target, s.crystal.size());
  std::vector<DriveSolution> sols = solve(pool, s.set, target, r.cfg.solver, r.cfg.refine);
  if (keep > 0 && static_cast<int>(sols.size()) > keep) sols.resize(static_cast<std::size_t>(keep));

  SolutionFile f{crystal_hash(s.crystal), grid_hash(*s.set.grid), r.cfg.hash(), s.gate_time, target, sols};
  write_json(r.out / "solutions.json", solutions_to_json(f));
  const DriveSolution& best = sols.front();
  std::printf("solve: %zu solutions, best |r| = %.6g rad/s, infidelity %.3g (target %s)\n", sols.size(),
              best.total_rabi_hz(s.gate_time), best.infidelity, target.label.c_str());
  if (spectrum) emit_spectrum(r, s, target, best);
  if (best.infidelity > r.cfg.solver.infidelity_threshold) {
    std::fprintf(stderr, "solve: no solution reaches the infidelity threshold %.3g\n",
                 r.cfg.solver.infidelity_threshold);
    return kInfeasible;
  }
  return kOk;
}

SolutionFile load_solutions(const Setup& s, const std::string& file) {
  SolutionFile f = solutions_from_json(read_json(file));
  check_provenance("solution file", f.crystal_hash, f.grid_hash, s.crystal, *s.set.grid);
  if (f.solutions.empty()) throw InfeasibleError("solution file holds no solutions");
  return f;
}

int cmd_refine(const Run& r, const std::string& file) {
  const Setup s = make_setup(r.cfg, r.cfg.crystal.n_ions);
  SolutionFile f = load_solutions(s, file);
  for (DriveSolution& d : f.solutions) d = refine(s.set, d, f.target, r.cfg.solver);
  std::stable_sort(f.solutions.begin(), f.solutions.end(), [&](const DriveSolution& a, const DriveSolution& b) {
    const double t = r.cfg.solver.infidelity_threshold;
    const bool fa = a.infidelity <= t, fb = b.infidelity <= t;
    if (fa != fb) return fa;
    return fa ? a.total_rabi < b.total_rabi : a.infidelity < b.infidelity;
  });
  f.config_hash = r.cfg.hash();
  write_json(r.out / "refined.json", solutions_to_json(f));
  std::printf("refine: best |r| = %.6g rad/s, infidelity %.3g\n", f.solutions.front().total_rabi_hz(s.gate_time),
              f.solutions.front().infidelity);
  return kOk;
}

int cmd_simulate(const Run& r, const std::string& file, int index) {
  const int n = r.cfg.crystal.n_ions;
  if (n > r.cfg.simulation.max_ions)
    throw ConfigError("simulate: " + std::to_string(n) + " ions exceed the simulator limit of " +
                      std::to_string(r.cfg.simulation.max_ions));
  const Setup s = make_setup(r.cfg, n);
  const SolutionFile f = load_solutions(s, file);
  if (index < 0 || index >= static_cast<int>(f.solutions.size()))
    throw ConfigError("simulate: solution index out of range");
  const DriveSolution& sol = f.solutions[static_cast<std::size_t>(index)];
  const SimConfig& sc = r.cfg.simulation;
  const SimulationResult res = simulate(s.crystal, *s.set.grid, sol.amplitudes, f.target.phases, sc);
  const double predicted = infidelity(raw_pair_phases(s.crystal, *s.set.grid, sol.amplitudes), f.target.phases,
                                      r.cfg.solver.ordered_infidelity);

  Json j{{"fidelity", res.fidelity},
         {"predicted_infidelity", predicted},
         {"tail_population", res.tail_population},
         {"cutoff_population", res.cutoff_population},
         {"trace_error", res.trace_error},
         {"valid", res.valid},
         {"carrier", res.carrier},
         {"debye_waller", res.debye_waller},
         {"phonon_cutoff", sc.phonon_cutoff},
         {"solution_index", index},
         {"target", f.target.label},
         {"config_hash", r.cfg.hash()}};
  write_json(r.out / "simulation.json", j);

  std::vector<std::string> cols{"time_fraction", "time_s"};
  const int dim = 1 << n;
  for (int k = 0; k < dim; ++k) cols.push_back("p_" + bits(k, n));
  for (int m = 0; m < n; ++m) cols.push_back("n_mode" + std::to_string(m));
  for (int m = 0; m < n; ++m) cols.push_back("x2_mode" + std::to_string(m));
  CsvWriter csv(cols);
  header(csv, "simulate", r.cfg);
  csv.comment("p_b = Z-basis population of spin state b (qubit 0 leftmost); n_mode = <a^dagger a>;"
              " x2_mode = <(a + a^dagger)^2> - 1, all modes starting in the ground state");
  csv.comment(std::string("carrier ") + (res.carrier ? "on" : "off") + ", debye_waller " +
              (res.debye_waller ? "on" : "off"));
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    std::vector<std::string> cells{fmt(res.times[i]), fmt(res.times[i] * s.gate_time)};
    for (int k = 0; k < dim; ++k) cells.push_back(fmt(res.populations(row, k)));
    for (int m = 0; m < n; ++m) cells.push_back(fmt(res.mode_occupations(row, m)));
    for (int m = 0; m < n; ++m) cells.push_back(fmt(res.mode_excursions(row, m)));
    csv.row(cells);
  }
  if (!res.times.empty()) csv.save(r.out / "simulation.csv");
  std::printf("simulate: fidelity %.6f, predicted infidelity %.3g, tail population %.3g%s\n", res.fidelity, predicted,
              res.tail_population, res.valid ? "" : " (INVALID: cutoff level populated)");
  return kOk;
}

int cmd_estimate(const Run& r) {
  const IonCrystal c = make_crystal(r.cfg);
  const double t_min = min_gate_time(c);
  const double t = r.cfg.gate_time.resolve(c);
  const TargetMatrix target = parse_target_spec(r.cfg.target, c.size());
  const double nuc = nuclear_norm_abs(target.phases);
  const double om = nuclear_norm_estimate(target, c, t, r.cfg.estimator);
  const double phi_max = target.phases.cwiseAbs().maxCoeff();
  const double ms = ms_reference_rabi(phi_max, c.mean_lamb_dicke(), t);
  CsvWriter csv({"target", "ions", "t_min_s", "gate_time_s", "nuc", "omega_nuc_rad_per_s", "omega_ms_rad_per_s"});
  header(csv, "estimate", r.cfg);
  csv.comment("omega_nuc = k (N nuc|phi|)^p / (sqrt(2 pi) <eta> T), k = " + fmt(r.cfg.estimator.k_nuc) +
              ", p = " + fmt(r.cfg.estimator.exponent));
  csv.comment("omega_ms = sqrt(max|phi|) / (sqrt(2 pi) <eta> T)");
  csv.row({target.label, fmt(c.size()), fmt(t_min), fmt(t), fmt(nuc), fmt(om), fmt(ms)});
  csv.save(r.out / "estimate.csv");
  std::printf("estimate: T_min = %.6g s, T = %.6g s, nuc = %.6g, Omega_nuc = %.6g rad/s, Omega_MS = %.6g rad/s\n",
              t_min, t, nuc, om, ms);
  return kOk;
}

void write_points(const Run& r, const std::string& verb, const std::vector<PowerPoint>& pts, const LineFit* fit,
                  const std::string& formula, const fs::path& path) {
  CsvWriter csv({"N", "t_over_tmin", "rabi_rad_per_s", "omega_nuc_rad_per_s", "target_label", "nuc",
                 "mean_rabi_rad_per_s", "normalized", "infidelity", "feasible"});
  header(csv, verb, r.cfg);
  csv.comment(formula);
  csv.comment("rabi = best total Rabi frequency |r| / T over the pool; omega_nuc at the gate time");
  if (fit) csv.comment("fit slope " + fmt(fit->slope) + " intercept " + fmt(fit->intercept) + " r2 " + fmt(fit->r2));
  for (const PowerPoint& p : pts)
    csv.row({fmt(p.ions), fmt(p.t_ratio), fmt(p.rabi), fmt(p.omega_nuc), p.target, fmt(p.nuc), fmt(p.mean_rabi),
             fmt(p.feasible ? p.normalized() : 0.0), fmt(p.infidelity), fmt(p.feasible ? 1 : 0)});
  csv.save(path);
}

int cmd_scaling(const Run& r) {
  const std::vector<PowerPoint> pts = run_scaling(r.cfg);
  std::optional<LineFit> fit;
  try {
    fit = scaling_fit(pts);
  } catch (const InfeasibleError&) {
  }
  write_points(r, "scaling", pts, fit ? &*fit : nullptr, kScalingFormula, r.out / "scaling.csv");
  if (!fit) {
    std::fprintf(stderr, "scaling: fewer than two feasible points\n");
    return kInfeasible;
  }
  std::printf("scaling: %zu points, log-log slope %.4f (r2 %.4f)\n", pts.size(), fit->slope, fit->r2);
  return kOk;
}

int cmd_collapse(const Run& r) {
  const std::vector<PowerPoint> pts = run_collapse(r.cfg);
  const LineFit fit = collapse_fit(pts);
  write_points(r, "collapse", pts, &fit, kCollapseFormula, r.out / "collapse.csv");
  std::printf("collapse: %zu targets, slope %.4f (r2 %.4f)\n", pts.size(), fit.slope, fit.r2);
  return kOk;
}

int cmd_compare(const Run& r) {
  const AnsatzComparison c = run_compare(r.cfg);
  std::vector<double> ratios;
  for (const AnsatzRow& row : c.rows) ratios.push_back(row.median_global / row.median_multi);
  CsvWriter power({"target", "nuc", "median_global_rad_per_s", "median_multi_rad_per_s", "mean_global_rad_per_s",
                   "mean_multi_rad_per_s", "feasible_global", "feasible_multi"});
  header(power, "compare-ansatz", r.cfg);
  power.comment("pools: global " + std::to_string(c.pool_global) + ", multi " + std::to_string(c.pool_multi) +
                "; ratio = median_global / median_multi");
  power.comment("median ratio " + fmt(median(ratios)));
  for (const AnsatzRow& row : c.rows)
    power.row({row.target, fmt(row.nuc), fmt(row.median_global), fmt(row.median_multi), fmt(row.mean_global),
               fmt(row.mean_multi), fmt(row.feasible_global), fmt(row.feasible_multi)});
  power.save(r.out / "compare_power.csv");

  CsvWriter ov({"multi_entry", "global_entry", "o_z", "o_r"});
  header(ov, "compare-ansatz", r.cfg);
  ov.comment("target " + c.overlap_target + "; o_z = max over global entries of |z_g~ . z| / (|z_g~| |z|)");
  ov.comment("o_r = same overlap between the refined solutions of the paired entries");
  for (std::size_t i = 0; i < c.o_z.size(); ++i)
    ov.row({fmt(c.multi_origin[i]), fmt(c.global_origin[i]), fmt(c.o_z[i]), fmt(c.o_r[i])});
  ov.save(r.out / "compare_overlap.csv");
  std::printf("compare-ansatz: median power ratio %.4f, median o_z %.4f, median o_r %.4f\n", median(ratios),
              median(c.o_z), median(c.o_r));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design of multi-qubit XX gates on trapped-ion crystals"};
  Globals g;
  app.add_option("--config", g.config, "run configuration (JSON)");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, "output directory (overrides output_dir)");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--allow-large", g.allow_large, "lift the desk-scale ion limit of the multi-address pipeline");
  bool schema = false;
  app.add_flag_callback("--help-config", [&] { schema = true; }, "print the run configuration schema");
  app.set_help_flag("-h,--help", "print help");
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string pool_file, sol_file;
  int keep = 0, index = 0;
  bool spectrum = false;
  auto* c_crystal = app.add_subcommand("crystal", "normal modes, Lamb-Dicke parameters and T_min");
  auto* c_pool = app.add_subcommand("pool", "aggregate zero-phase solutions");
  auto* c_solve = app.add_subcommand("solve", "convert and refine a pool for the configured target");
  c_solve->add_option("--pool", pool_file, "pool file")->required();
  c_solve->add_option("--keep", keep, "keep only the best K solutions (0 keeps all)");
  c_solve->add_flag("--emit-spectrum", spectrum, "write per-ion power and per-tone amplitude tables");
  auto* c_refine = app.add_subcommand("refine", "refine an existing solution file again");
  c_refine->add_option("--solutions", sol_file, "solution file")->required();
  auto* c_sim = app.add_subcommand("simulate", "spin-phonon simulation of one solution (N <= 6)");
  c_sim->add_option("--solutions", sol_file, "solution file")->required();
  c_sim->add_option("--index", index, "solution index (0 is the best)");
  auto* c_est = app.add_subcommand("estimate", "nuclear-norm and MS power estimates");
  auto* c_scaling = app.add_subcommand("scaling", "power versus gate time over crystal sizes");
  auto* c_collapse = app.add_subcommand("collapse", "best power versus nuclear norm over assorted targets");
  auto* c_compare = app.add_subcommand("compare-ansatz", "global versus multi-address zero-phase pools");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (schema) {
    std::cout << run_config_schema();
    return kOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kConfig;
  }

  try {
    set_thread_count(g.threads);
    const Run r = load(g);
    if (c_crystal->parsed()) {
      cmd_crystal(r);
      return kOk;
    }
    if (c_pool->parsed()) return cmd_pool(r);
    if (c_solve->parsed()) return cmd_solve(r, pool_file, keep, spectrum);
    if (c_refine->parsed()) return cmd_refine(r, sol_file);
    if (c_sim->parsed()) return cmd_simulate(r, sol_file, index);
    if (c_est->parsed()) return cmd_estimate(r);
    if (c_scaling->parsed()) return cmd_scaling(r);
    if (c_collapse->parsed()) return cmd_collapse(r);
    if (c_compare->parsed()) return cmd_compare(r);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}
