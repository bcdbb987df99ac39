#include "lsf/zeropool.hpp"

#include <algorithm>
#include <cmath>

#include "lsf/analysis.hpp"
#include "lsf/parallel.hpp"
#include "lsf/random.hpp"

namespace lsf {

std::string to_string(Ansatz a) { return a == Ansatz::global ? "global" : "multi"; }

Ansatz parse_ansatz(const std::string& s) {
  if (s == "global") return Ansatz::global;
  if (s == "multi") return Ansatz::multi;
  throw ConfigError("unknown ansatz '" + s + "' (expected global or multi)");
}

void SearchParams::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("search: epsilon must be positive");
  if (max_iter < 0) throw ConfigError("search: max_iter must be non-negative");
  if (!(step > 0.0 && step <= 1.0)) throw ConfigError("search: step must lie in (0, 1]");
  if (!(min_step > 0.0 && min_step <= step)) throw ConfigError("search: min_step must lie in (0, step]");
  if (max_retries < 0) throw ConfigError("search: max_retries must be non-negative");
}

double max_residual(const ConstraintSystem& system, const Vec& z) {
  const Vec c = system.values(z);
  return c.size() == 0 ? 0.0 : c.cwiseAbs().maxCoeff();
}

ZeroPhaseSolution zero_phase_search_from(const ConstraintSystem& system, const Vec& start, const SearchParams& params,
                                         std::uint64_t seed, Ansatz ansatz) {
  params.validate();
  if (start.size() != system.dim()) throw ConfigError("zero-phase search: start vector has the wrong length");
  const double start_norm = start.norm();
  if (!(start_norm > 0.0)) throw ConfigError("zero-phase search: start vector is zero");

  Rng kicks(seed ^ 0x9e3779b97f4a7c15ull);
  ZeroPhaseSolution out;
  out.seed = seed;
  out.ansatz = ansatz;
  Vec z = start / start_norm;
  Vec c = system.values(z);
  double res = c.cwiseAbs().maxCoeff();
  int retries = 0;

  const int d = system.dim();
  Mat s(system.count() + 1, d);
  Vec rhs(system.count() + 1);
  int it = 0;
  while (res > params.epsilon && it < params.max_iter) {
    ++it;
    s.topRows(system.count()) = system.jacobian(z);
    s.bottomRows(1) = z.transpose();
    rhs.head(system.count()) = -c;
    rhs(system.count()) = 0.0;
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(s);
    const Vec dir = cod.solve(rhs);

    bool improved = false;
    if (dir.allFinite()) {
      for (double t = params.step; t >= params.min_step; t *= 0.5) {
        Vec trial = z + t * dir;
        trial /= trial.norm();
        const Vec ct = system.values(trial);
        const double rt = ct.cwiseAbs().maxCoeff();
        if (rt < res) {
          z = std::move(trial);
          c = ct;
          res = rt;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      if (retries >= params.max_retries) break;
      ++retries;
      // Kick off the stall with a perturbation proportional to the residual.
      const double size = std::min(0.1, std::sqrt(res));
      z += size * kicks.unit_vector(d);
      z /= z.norm();
      c = system.values(z);
      res = c.cwiseAbs().maxCoeff();
    }
  }
  out.coords = std::move(z);
  out.residual = res;
  out.iterations = it;
  out.converged = res <= params.epsilon;
  return out;
}

ZeroPhaseSolution zero_phase_search(const ConstraintSystem& system, std::uint64_t seed, const SearchParams& params,
                                    Ansatz ansatz) {
  Rng rng(seed);
  return zero_phase_search_from(system, rng.unit_vector(system.dim()), params, seed, ansatz);
}

double multi_residual_scale(const IonCrystal& crystal) { return 1.0 / crystal.lamb_dicke.cwiseAbs2().mean(); }

std::unique_ptr<ConstraintSystem> pool_constraints(const CouplingSet& set, Ansatz ansatz) {
  if (ansatz == Ansatz::global) return std::make_unique<ModeConstraints>(set);
  return std::make_unique<PairConstraints>(set, multi_residual_scale(*set.crystal));
}

SolutionPool aggregate_pool(const CouplingSet& set, Ansatz ansatz, const PoolParams& params) {
  if (params.count < 1) throw ConfigError("pool: count must be at least 1");
  if (!(params.overlap_threshold > 0.0)) throw ConfigError("pool: overlap threshold must be positive");
  params.search.validate();
  const int budget = params.seed_budget > 0 ? params.seed_budget : 4 * params.count;
  const auto system = pool_constraints(set, ansatz);

  SolutionPool pool;
  pool.ansatz = ansatz;
  pool.epsilon = params.search.epsilon;
  pool.overlap_threshold = params.overlap_threshold;
  pool.residual_scale = ansatz == Ansatz::multi ? multi_residual_scale(*set.crystal) : 1.0;

  const int batch = std::max(1, thread_count());
  int next = 0;
  std::vector<ZeroPhaseSolution> results;
  while (static_cast<int>(pool.entries.size()) < params.count && next < budget) {
    const int size = std::min(batch, budget - next);
    results.assign(static_cast<std::size_t>(size), {});
    parallel_for(size, [&](int i) {
      results[static_cast<std::size_t>(i)] =
          zero_phase_search(*system, params.first_seed + static_cast<std::uint64_t>(next + i), params.search, ansatz);
    });
    next += size;
    for (auto& r : results) {
      if (static_cast<int>(pool.entries.size()) >= params.count) break;
      ++pool.stats.attempts;
      if (!r.converged) continue;
      // Re-verify independently of the search bookkeeping.
      r.residual = max_residual(*system, r.coords);
      if (r.residual > params.search.epsilon) continue;
      ++pool.stats.converged;
      bool fresh = true;
      if (params.overlap_threshold < 1.0) {
        for (const auto& e : pool.entries) {
          if (overlap(e.coords, r.coords) >= params.overlap_threshold) {
            fresh = false;
            break;
          }
        }
      }
      if (!fresh) {
        ++pool.stats.rejected_overlap;
        continue;
      }
      pool.entries.push_back(std::move(r));
    }
  }
  if (pool.entries.empty() && !params.allow_empty)
    throw InfeasibleError("pool: no zero-phase solution found in " + std::to_string(pool.stats.attempts) +
                          " searches; try a longer gate time (at least T_min) or more tones");
  return pool;
}

}  // namespace lsf
