#include "lsf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lsf/random.hpp"
#include "lsf/targets.hpp"

namespace lsf {

Setup make_setup(const RunConfig& config, int ions, double gate_time) {
  Setup s;
  s.crystal = make_crystal(config, ions);
  s.t_min = min_gate_time(s.crystal);
  s.gate_time = gate_time > 0.0 ? gate_time : config.gate_time.resolve(s.crystal);
  s.set = make_couplings(config, s.crystal, s.gate_time);
  return s;
}

void check_multi_guard(const RunConfig& config, int ions) {
  if (ions > config.max_multi_ions && !config.allow_large)
    throw ConfigError("multi-address pipeline on " + std::to_string(ions) + " ions exceeds the desk limit of " +
                      std::to_string(config.max_multi_ions) + " (set guards.allow_large or pass --allow-large)");
}

SolutionPool make_pool(const RunConfig& config, const CouplingSet& set, Ansatz ansatz, int count,
                       std::uint64_t first_seed, bool allow_empty) {
  if (ansatz == Ansatz::multi) check_multi_guard(config, set.ions());
  PoolParams p = config.pool;
  p.count = count;
  p.first_seed = first_seed;
  p.allow_empty = allow_empty;
  SolutionPool pool = aggregate_pool(set, ansatz, p);
  pool.crystal_hash = crystal_hash(*set.crystal);
  pool.grid_hash = grid_hash(*set.grid);
  return pool;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

namespace {

PowerPoint best_point(const Setup& s, const SolutionPool& pool, const TargetMatrix& target, const RunConfig& config) {
  PowerPoint p;
  p.ions = s.crystal.size();
  p.t_min = s.t_min;
  p.gate_time = s.gate_time;
  p.t_ratio = s.gate_time / s.t_min;
  p.target = target.label;
  p.nuc = nuclear_norm_abs(target.phases);
  p.omega_nuc = nuclear_norm_estimate(target, s.crystal, s.gate_time, config.estimator);
  p.pool_size = static_cast<int>(pool.entries.size());
  if (pool.entries.empty()) return p;
  try {
    const std::vector<DriveSolution> sols = solve(pool, s.set, target, config.solver, config.refine);
    const DriveSolution& best = sols.front();
    p.infidelity = best.infidelity;
    p.rabi = best.total_rabi_hz(s.gate_time);
    p.feasible = best.infidelity <= config.solver.infidelity_threshold;
    double sum = 0.0;
    for (const DriveSolution& d : sols)
      if (d.infidelity <= config.solver.infidelity_threshold) {
        sum += d.total_rabi_hz(s.gate_time);
        ++p.feasible_count;
      }
    if (p.feasible_count > 0) p.mean_rabi = sum / p.feasible_count;
  } catch (const InfeasibleError&) {
    p.feasible = false;
  }
  return p;
}

}  // namespace

std::vector<PowerPoint> run_scaling(const RunConfig& config) {
  const ScalingSpec& sc = config.scaling;
  if (sc.ions.empty() || sc.t_over_tmin.empty() || sc.targets.empty())
    throw ConfigError("scaling: ions, t_over_tmin and targets must all be non-empty");
  if (config.ansatz == Ansatz::multi)
    for (int n : sc.ions) check_multi_guard(config, n);
  std::vector<PowerPoint> out;
  for (int n : sc.ions) {
    const IonCrystal crystal = make_crystal(config, n);
    const double t_min = min_gate_time(crystal);
    for (double ratio : sc.t_over_tmin) {
      const Setup s = make_setup(config, n, ratio * t_min);
      const SolutionPool pool = make_pool(config, s.set, config.ansatz, sc.pool_count, config.seed, true);
      for (const std::string& spec : sc.targets) {
        PowerPoint p = best_point(s, pool, parse_target_spec(spec, n), config);
        p.t_ratio = ratio;
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

LineFit scaling_fit(const std::vector<PowerPoint>& points) {
  std::vector<double> x, y;
  for (const PowerPoint& p : points)
    if (p.feasible && p.rabi > 0.0) {
      x.push_back(std::log(p.t_ratio));
      y.push_back(std::log(p.normalized()));
    }
  if (x.size() < 2) throw InfeasibleError("scaling: fewer than two feasible points to fit");
  return fit_line(x, y);
}

std::vector<TargetMatrix> assorted_targets(int ions, int count, std::uint64_t seed, double density,
                                           double amplitude) {
  if (ions < 2) throw ConfigError("assorted targets: need at least two ions");
  Rng rng(seed);
  std::vector<TargetMatrix> out;
  for (int k = 0; static_cast<int>(out.size()) < count; ++k) {
    TargetMatrix t;
    switch (k % 4) {
      case 0: {  // random graph, density swept around the configured value
        const double d = std::clamp(density * (0.25 + 1.5 * rng.uniform()), 0.05, 1.0);
        t = target_random(ions, d, amplitude, seed + static_cast<std::uint64_t>(k));
        break;
      }
      case 1: {  // all-to-all on a contiguous block
        const int size = 2 + static_cast<int>(rng.uniform() * (ions - 1));
        const int start = static_cast<int>(rng.uniform() * (ions - size + 1));
        std::vector<int> subset;
        for (int i = 0; i < size; ++i) subset.push_back(start + i);
        t = target_all_to_all(ions, subset, amplitude);
        break;
      }
      case 2: {  // disjoint pairs with random phases
        std::vector<PairPhase> pairs;
        const int count_pairs = 1 + static_cast<int>(rng.uniform() * (ions / 2));
        for (int i = 0; i < count_pairs; ++i)
          pairs.push_back({2 * i, 2 * i + 1, amplitude * (0.2 + 0.8 * rng.uniform())});
        t = target_pairwise(ions, pairs);
        break;
      }
      default: {  // cluster grid
        const int rows = 1 + static_cast<int>(rng.uniform() * 3);
        const int cols = std::max(2, std::min(ions / rows, 2 + static_cast<int>(rng.uniform() * 4)));
        if (rows * cols > ions) continue;
        t = target_cluster_grid(ions, rows, cols, amplitude);
        break;
      }
    }
    if (t.coupled_set.empty()) continue;
    t.label += "#" + std::to_string(k);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<PowerPoint> run_collapse(const RunConfig& config) {
  const int n = config.crystal.n_ions;
  if (config.ansatz == Ansatz::multi) check_multi_guard(config, n);
  const Setup s = make_setup(config, n);
  const SolutionPool pool = make_pool(config, s.set, config.ansatz, config.collapse.pool_count, config.seed);
  std::vector<PowerPoint> out;
  for (const TargetMatrix& t :
       assorted_targets(n, config.collapse.targets, config.seed, config.collapse.density, config.collapse.amplitude))
    out.push_back(best_point(s, pool, t, config));
  return out;
}

LineFit collapse_fit(const std::vector<PowerPoint>& points, bool use_mean) {
  std::vector<double> x, y;
  for (const PowerPoint& p : points)
    if (p.feasible && p.rabi > 0.0 && p.nuc > 0.0) {
      x.push_back(std::log(p.nuc));
      y.push_back(std::log(use_mean ? p.mean_rabi : p.rabi));
    }
  if (x.size() < 2) throw InfeasibleError("collapse: fewer than two feasible points to fit");
  return fit_line(x, y);
}

AnsatzComparison run_compare(const RunConfig& config) {
  const int n = config.crystal.n_ions;
  check_multi_guard(config, n);
  const Setup s = make_setup(config, n);
  const CompareSpec& cs = config.compare;
  AnsatzComparison out;
  out.ions = n;
  const SolutionPool global = make_pool(config, s.set, Ansatz::global, cs.pool_count, config.seed);
  const SolutionPool multi = make_pool(config, s.set, Ansatz::multi, cs.pool_count, config.seed);
  out.pool_global = static_cast<int>(global.entries.size());
  out.pool_multi = static_cast<int>(multi.entries.size());

  const double threshold = config.solver.infidelity_threshold;
  auto feasible_rabi = [&](const std::vector<DriveSolution>& sols) {
    std::vector<double> r;
    for (const DriveSolution& d : sols)
      if (d.infidelity <= threshold) r.push_back(d.total_rabi_hz(s.gate_time));
    return r;
  };
  auto mean = [](const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return v.empty() ? std::nan("") : sum / static_cast<double>(v.size());
  };

  std::vector<TargetMatrix> targets;
  for (int k = 0; k < cs.targets; ++k)
    targets.push_back(target_random(n, cs.density, cs.amplitude, config.seed + 1000 + static_cast<std::uint64_t>(k)));

  std::size_t widest = 0;
  std::vector<DriveSolution> widest_global, widest_multi;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const TargetMatrix& t = targets[k];
    AnsatzRow row;
    row.target = t.label;
    row.nuc = nuclear_norm_abs(t.phases);
    std::vector<DriveSolution> g = solve(global, s.set, t, config.solver, config.refine);
    std::vector<DriveSolution> m = solve(multi, s.set, t, config.solver, config.refine);
    const std::vector<double> rg = feasible_rabi(g), rm = feasible_rabi(m);
    row.feasible_global = static_cast<int>(rg.size());
    row.feasible_multi = static_cast<int>(rm.size());
    row.median_global = median(rg);
    row.median_multi = median(rm);
    row.mean_global = mean(rg);
    row.mean_multi = mean(rm);
    if (k == 0 || row.nuc > out.rows[widest].nuc) {
      widest = k;
      widest_global = std::move(g);
      widest_multi = std::move(m);
    }
    out.rows.push_back(row);
  }
  if (targets.empty()) return out;
  out.overlap_target = out.rows[widest].target;

  std::map<int, const DriveSolution*> by_origin_g, by_origin_m;
  for (const DriveSolution& d : widest_global) by_origin_g[d.origin] = &d;
  for (const DriveSolution& d : widest_multi) by_origin_m[d.origin] = &d;
  for (const auto& [origin, sol] : by_origin_m) {
    const Vec z = multi.entries[static_cast<std::size_t>(origin)].coords;
    int closest = -1;
    double best = -1.0;
    for (const auto& [g_origin, g_sol] : by_origin_g) {
      const double o = overlap(stacked_coords(global.entries[static_cast<std::size_t>(g_origin)], n), z);
      if (o > best) {
        best = o;
        closest = g_origin;
      }
    }
    if (closest < 0) continue;
    out.multi_origin.push_back(origin);
    out.global_origin.push_back(closest);
    out.o_z.push_back(best);
    out.o_r.push_back(overlap(sol->coords, by_origin_g[closest]->coords));
  }
  return out;
}

}  // namespace lsf
