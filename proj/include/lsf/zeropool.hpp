#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsf/coupling.hpp"

namespace lsf {

enum class Ansatz { global, multi };

std::string to_string(Ansatz a);
Ansatz parse_ansatz(const std::string& s);

struct SearchParams {
  double epsilon = 1e-8;  ///< accept when every |constraint| is at most this
  int max_iter = 200;
  double step = 1.0;      ///< initial damping of the Newton step, halved on non-improvement
  double min_step = 1.0 / 1024.0;
  int max_retries = 4;    ///< random kicks after a stalled or singular step

  void validate() const;
};

struct ZeroPhaseSolution {
  Vec coords;  ///< unit norm
  double residual = 0.0;
  std::uint64_t seed = 0;
  Ansatz ansatz = Ansatz::global;
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton descent on the constraint values from a seeded random unit
/// vector. Each step solves [J; z^T] d = [-c; 0] in the minimum-norm least
/// squares sense and renormalizes. Non-convergence is reported through
/// `converged`, not thrown.
ZeroPhaseSolution zero_phase_search(const ConstraintSystem& system, std::uint64_t seed, const SearchParams& params,
                                    Ansatz ansatz = Ansatz::global);
/// Same from an explicit starting vector (normalized internally).
ZeroPhaseSolution zero_phase_search_from(const ConstraintSystem& system, const Vec& start, const SearchParams& params,
                                         std::uint64_t seed = 0, Ansatz ansatz = Ansatz::global);

struct PoolStats {
  int attempts = 0;
  int converged = 0;
  int rejected_overlap = 0;
  double success_rate() const { return attempts == 0 ? 0.0 : static_cast<double>(converged) / attempts; }
};

struct SolutionPool {
  std::vector<ZeroPhaseSolution> entries;
  Ansatz ansatz = Ansatz::global;
  double epsilon = 1e-8;
  double overlap_threshold = 0.9;
  double residual_scale = 1.0;  ///< multiplier applied to the pair phases for the multi ansatz
  std::string crystal_hash;
  std::string grid_hash;
  PoolStats stats;
};

struct PoolParams {
  int count = 150;
  double overlap_threshold = 0.9;
  std::uint64_t first_seed = 1;
  int seed_budget = 0;  ///< maximum searches; 0 means 4 * count
  bool allow_empty = false;  ///< return an empty pool (with stats) instead of throwing
  SearchParams search;
};

/// Constraint system used for pooling: per-mode forms for the global ansatz,
/// pair forms scaled by 1 / mean(eta^2) for the multi ansatz.
std::unique_ptr<ConstraintSystem> pool_constraints(const CouplingSet& set, Ansatz ansatz);
double multi_residual_scale(const IonCrystal& crystal);

/// Runs seeded searches (parallel in batches) and admits converged solutions
/// in seed order when their overlap with every admitted entry is below the
/// threshold. Throws InfeasibleError when nothing is admitted unless
/// allow_empty is set.
SolutionPool aggregate_pool(const CouplingSet& set, Ansatz ansatz, const PoolParams& params);

/// Largest |z^T Q z| recomputed directly from the constraint system.
double max_residual(const ConstraintSystem& system, const Vec& z);

}  // namespace lsf
