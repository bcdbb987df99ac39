#pragma once

#include <string>
#include <vector>

#include "lsf/coupling.hpp"
#include "lsf/targets.hpp"
#include "lsf/zeropool.hpp"

namespace lsf {

struct SolverConfig {
  double epsilon = 1e-3;  ///< bound on |d^T A_nm d| used to pick lambda
  double delta = 1e-2;    ///< relative norm reduction requested per descent step
  double max_delta = 0.2; ///< accepted steps grow delta by 1.5x up to this
  int max_iters = 400;
  int stall_patience = 10;
  double stall_tolerance = 1e-4;       ///< relative |r| change over the patience window
  double infidelity_threshold = 1e-4;  ///< ranking cut and descent acceptance bound
  double polish_target = 1e-12;        ///< feasibility polish stops below this infidelity
  int polish_iters = 20;
  bool ordered_infidelity = true;

  void validate() const;
};

struct DriveSolution {
  Vec coords;      ///< stacked kernel coordinates (r_1 .. r_N), dimensionless (amplitude x T)
  Mat amplitudes;  ///< N x M raw tone amplitudes, row n = (B r_n)^T
  double total_rabi = 0.0;  ///< |coords|
  double lambda = 0.0;
  int origin = -1;  ///< pool entry index
  double infidelity = 0.0;
  double converted_infidelity = 0.0;  ///< before refinement
  double converted_rabi = 0.0;
  int iterations = 0;
  std::vector<double> rabi_trace;  ///< |r| after every accepted descent step
  double polish_change = 0.0;      ///< relative |r| change of the final feasibility polish
  bool warning = false;            ///< refinement hit a failed linear solve
  std::string note;

  int ions() const { return static_cast<int>(amplitudes.rows()); }
  /// Total Rabi frequency in rad/s for gate time T (coords are in units of 1/T).
  double total_rabi_hz(double gate_time) const { return total_rabi / gate_time; }
};

/// Stacked z: N copies of a global kernel vector, renormalized.
Vec expand_global(const Vec& z_global, int ions);

/// Pool entry as an NK-vector, expanding global entries.
Vec stacked_coords(const ZeroPhaseSolution& z, int ions);

/// Minimum-norm solution u of M u = phi with M = 2 z^T Q_p (the pair
/// Jacobian at z), using an SVD pseudo-inverse with relative cutoff 1e-10.
/// Throws InfeasibleError when M is rank deficient for this target.
Vec linear_deviation(const ConstraintSystem& pairs, const Vec& z, const Vec& phi);

/// lambda = sqrt(max_p |u^T Q_p u| / epsilon); 1 when u vanishes.
double choose_lambda(const ConstraintSystem& pairs, const Vec& u, double epsilon);
double choose_lambda(const CouplingSet& set, const Vec& z, const TargetMatrix& target, double epsilon);

/// r = lambda z + u / lambda.
DriveSolution convert(const CouplingSet& set, const Vec& z, const TargetMatrix& target, const SolverConfig& config);

/// Descent on |r| with the linearized constraints (least squares of
/// [J; r^T/|r|] d = [dphi; -delta |r|]), then a delta = 0 feasibility polish
/// whose relative effect on |r| is reported in polish_change.
/// Never returns a worse infidelity than the input.
DriveSolution refine(const CouplingSet& set, const DriveSolution& start, const TargetMatrix& target,
                     const SolverConfig& config);

/// Builds amplitudes, phases and metrics for given coordinates.
DriveSolution make_solution(const CouplingSet& set, const Vec& coords, const TargetMatrix& target,
                            const SolverConfig& config);

/// Converts and refines every pool entry (parallel) and ranks the results:
/// entries within the infidelity threshold by total Rabi frequency, then the
/// rest by infidelity. Unusable entries are dropped; throws when none remain.
std::vector<DriveSolution> solve(const SolutionPool& pool, const CouplingSet& set, const TargetMatrix& target,
                                 const SolverConfig& config, bool do_refine = true);

/// Adiabatic-limit design: one tone nu_c + 2 pi s / T with s = N n + m
/// (1-based n < m) per target pair, driven on ions n and m only. Amplitudes are
/// calibrated with the long-time (1/s) limit of the single-tone pair coupling
/// summed over all modes.
struct AdiabaticDesign {
  std::shared_ptr<const ToneGrid> grid;  ///< custom (non-harmonic) tones
  Mat amplitudes;                        ///< N x M
  int mode = -1;                         ///< mode the tones sit next to
  double gap_product = 0.0;              ///< smallest mode gap (angular) x T
};
AdiabaticDesign adiabatic_solution(const IonCrystal& crystal, const TargetMatrix& target, double gate_time,
                                   double min_gap_product = 50.0);

/// Exact phases r_n^T A_nm r_m of raw amplitudes on an arbitrary tone set.
Mat raw_pair_phases(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes);

}  // namespace lsf
