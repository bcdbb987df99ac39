#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsf/analysis.hpp"
#include "lsf/io.hpp"
#include "lsf/lsf.hpp"
#include "lsf/zeropool.hpp"

namespace lsf {

/// Crystal, gate time and couplings of one run.
struct Setup {
  IonCrystal crystal;
  double t_min = 0.0;
  double gate_time = 0.0;
  CouplingSet set;
};

/// gate_time <= 0 takes the configured gate time.
Setup make_setup(const RunConfig& config, int ions, double gate_time = 0.0);

/// Throws ConfigError when a multi-address pipeline exceeds the desk limit.
void check_multi_guard(const RunConfig& config, int ions);

/// aggregate_pool with provenance hashes filled in.
SolutionPool make_pool(const RunConfig& config, const CouplingSet& set, Ansatz ansatz, int count,
                       std::uint64_t first_seed, bool allow_empty = false);

/// Best feasible solution of every (ions, T/T_min, target) combination.
struct PowerPoint {
  int ions = 0;
  double t_ratio = 0.0;  ///< T / T_min
  std::string target;
  double t_min = 0.0;
  double gate_time = 0.0;
  double rabi = 0.0;       ///< best total Rabi frequency, rad/s
  double mean_rabi = 0.0;  ///< mean over all feasible solutions, rad/s
  int feasible_count = 0;
  double nuc = 0.0;        ///< nuclear norm of |phi|
  double omega_nuc = 0.0;  ///< nuclear-norm estimate at the gate time, rad/s
  double infidelity = 0.0;
  int pool_size = 0;
  bool feasible = false;

  /// |r| / Omega_nuc(T_min): constant in N when the estimate captures the size dependence.
  double normalized() const { return rabi / (omega_nuc * gate_time / t_min); }
};
inline constexpr const char* kScalingFormula = "x = T / T_min; y = |r| / Omega_nuc(T_min); "
                                               "Omega_nuc(T) = k (N nuc|phi|)^p / (sqrt(2 pi) <eta> T)";
inline constexpr const char* kCollapseFormula = "fit log|r_best| = slope * log nuc|phi| + c at fixed N and T";

std::vector<PowerPoint> run_scaling(const RunConfig& config);
/// log-log fit of normalized() against t_ratio over feasible points.
LineFit scaling_fit(const std::vector<PowerPoint>& points);

/// Mixed family of targets on n ions (pairs, subsets, clusters, random
/// graphs) with varied structure, for the nuclear-norm regression.
std::vector<TargetMatrix> assorted_targets(int ions, int count, std::uint64_t seed, double density,
                                           double amplitude);
std::vector<PowerPoint> run_collapse(const RunConfig& config);
/// log|r| against log nuc over feasible points, using the best or the
/// pool-averaged power.
LineFit collapse_fit(const std::vector<PowerPoint>& points, bool use_mean = false);

struct AnsatzRow {
  std::string target;
  double nuc = 0.0;
  double median_global = 0.0;  ///< rad/s over feasible solutions
  double median_multi = 0.0;
  double mean_global = 0.0;
  double mean_multi = 0.0;
  int feasible_global = 0;
  int feasible_multi = 0;
};
struct AnsatzComparison {
  int ions = 0;
  std::vector<AnsatzRow> rows;
  std::string overlap_target;  ///< target with the largest nuclear norm
  std::vector<int> multi_origin;
  std::vector<int> global_origin;
  std::vector<double> o_z;  ///< closest expanded global zero-phase solution
  std::vector<double> o_r;  ///< overlap of the corresponding refined solutions
  int pool_global = 0;
  int pool_multi = 0;
};
AnsatzComparison run_compare(const RunConfig& config);

double median(std::vector<double> v);

}  // namespace lsf
