#pragma once

#include <vector>

#include "lsf/crystal.hpp"
#include "lsf/spectrum.hpp"
#include "lsf/types.hpp"

namespace lsf {

/// Options of the small-register simulator.
///
/// Spin states are indexed with qubit 0 as the most significant bit, in the
/// computational (Z) basis.
struct SimConfig {
  int phonon_cutoff = 14;
  bool carrier = false;       ///< add (1/N) of the carrier term to every mode stage
  double carrier_scale = 1.0; ///< multiplies the carrier term (0 exercises the full propagation alone)
  bool debye_waller = false;  ///< O(eta^2) correction of the sideband operators
  CVec initial_state;         ///< Z-basis state over 2^N; empty means |0...0>
  std::vector<int> mode_order;  ///< stage order; empty means 0..N-1
  int samples = 0;            ///< time-series points (ideal and Debye-Waller paths only)
  double rel_tol = 1e-13;
  double abs_tol = 1e-14;
  int max_ions = 6;

  void validate(int ions) const;
};

struct SimulationResult {
  CMat rho;  ///< final Z-basis spin density matrix
  double fidelity = 0.0;
  double tail_population = 0.0;   ///< max over stages and time of sum_{n>10} <n|rho_mode|n>
  double cutoff_population = 0.0; ///< max population of the top Fock level
  double trace_error = 0.0;
  bool valid = true;              ///< false when the cutoff population exceeds 1e-5
  std::vector<double> times;      ///< fractions of T
  Mat mode_occupations;           ///< samples x N, <n_j>
  Mat mode_excursions;            ///< samples x N, <(a_j + a_j^dagger)^2> - 1
  Mat populations;                ///< samples x 2^N, Z-basis populations
  bool carrier = false;
  bool debye_waller = false;
};

/// exp(i sum_{n<m} phi_nm X_n X_m) |init> in the Z basis.
CVec ideal_state(const Mat& phases, const CVec& initial = CVec());

/// Sequential per-mode evolution of the spin-phonon interaction for raw
/// N x M amplitudes (dimensionless, amplitude x T) on `grid`. The fidelity is
/// taken against ideal_state(target_phases, initial).
SimulationResult simulate(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes,
                          const Mat& target_phases, const SimConfig& config = {});

/// Magnus-exact description of the gate.
struct AnalyticUnitary {
  Mat phases;    ///< r_n^T A_nm r_m
  CMat alpha_T;  ///< alpha_j^(n)(T), (mode, ion)
};
AnalyticUnitary analytic_unitary(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes);

/// Final spin density matrix implied by the analytic unitary with all modes
/// starting in the ground state, and its fidelity with the ideal state.
CMat analytic_density(const AnalyticUnitary& u, const CVec& initial = CVec());
double analytic_fidelity(const AnalyticUnitary& u, const Mat& target_phases, const CVec& initial = CVec());

}  // namespace lsf
