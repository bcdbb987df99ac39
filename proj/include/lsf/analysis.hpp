#pragma once

#include "lsf/coupling.hpp"
#include "lsf/crystal.hpp"
#include "lsf/spectrum.hpp"
#include "lsf/targets.hpp"

namespace lsf {

struct EstimatorConfig {
  double k_nuc = 4.0;
  double exponent = 0.5;

  void validate() const;
};

/// Achieved phases r_n^T A_nm r_m for stacked kernel coordinates.
TargetMatrix realized_phases(const CouplingSet& set, const Vec& coords);

/// Sum of squared phase errors. With `ordered` every unordered pair counts
/// twice (sum over n != m), otherwise once.
double infidelity(const Mat& actual, const Mat& ideal, bool ordered = true);

/// Sum of singular values of the elementwise absolute value.
double nuclear_norm_abs(const Mat& phases);

/// k (N nuc|phi|)^p / (sqrt(2 pi) <eta> T) in rad/s.
double nuclear_norm_estimate(const TargetMatrix& target, const IonCrystal& crystal, double gate_time,
                             const EstimatorConfig& config = {});

/// sqrt|phi| / (sqrt(2 pi) eta T) in rad/s.
double ms_reference_rabi(double phi, double eta, double gate_time);

/// <x_j^2> excess over the ground state for every mode at fraction tau of the
/// gate: 4 sum_n (Re alpha_j^(n))^2.
Vec mode_variance(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes, double tau);

/// <X_n^2> = sum_j O_j(n)^2 <x_j^2> for every ion.
Vec ion_variances(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes, double tau);
double ion_variance(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes, int ion, double tau);

/// |a . b| / (|a| |b|); zero when either vector vanishes.
double overlap(const Vec& a, const Vec& b);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lsf
