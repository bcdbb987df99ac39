#pragma once

#include <optional>
#include <span>

#include "lsf/types.hpp"

namespace lsf {

/// Physical description of an equally spaced linear ion crystal.
///
/// Units are SI except where the field name says otherwise: spacing in
/// metres, band edges in Hz (ordinary frequency), mass in atomic mass units,
/// wavenumber in 1/m and base_rabi in rad/s.
struct CrystalConfig {
  int n_ions = 2;
  double spacing = 5e-6;
  double mode_freq_low = 3.0e6;
  double mode_freq_high = 3.5e6;
  double ion_mass_amu = 40.0;
  double drive_wavenumber = 1.54e6;
  double base_rabi = 1.0;
  /// Dimensionless Coulomb-to-trap ratio of the transverse Hessian. When
  /// unset it is derived from spacing, mass and the upper band edge.
  std::optional<double> coulomb_coupling;

  void validate() const;
};

/// Transverse normal modes of an ion crystal.
struct IonCrystal {
  CrystalConfig config;
  Vec mode_freqs;     ///< angular frequencies nu_j, ascending
  Mat participation;  ///< participation(n, j): share of ion n in mode j; orthogonal
  Vec lamb_dicke;     ///< single-ion Lamb-Dicke parameter per mode

  int size() const { return static_cast<int>(mode_freqs.size()); }
  double mean_lamb_dicke() const { return lamb_dicke.mean(); }
  /// Index of the mode with the most uniform participation (centre of mass).
  int com_mode() const;
};

/// Dimensionless Coulomb coupling c used by build_crystal for `config`.
double coulomb_coupling(const CrystalConfig& config);

/// Builds the transverse Hessian of the equally spaced crystal, diagonalizes
/// it and maps the eigenfrequencies affinely onto the configured band.
///
/// Throws ConfigError on invalid config, NumericalError("unstable crystal")
/// when the Hessian is not positive definite.
IonCrystal build_crystal(const CrystalConfig& config);

/// Smallest adjacent gap among the used modes (all modes when empty).
double min_mode_gap(const IonCrystal& crystal, std::span<const int> used_modes = {});
double min_mode_gap(const Vec& mode_freqs, std::span<const int> used_modes = {});

/// T_min = 2 pi / (smallest used-mode gap), gap taken as angular frequency.
double min_gate_time(const IonCrystal& crystal, std::span<const int> used_modes = {});

}  // namespace lsf
