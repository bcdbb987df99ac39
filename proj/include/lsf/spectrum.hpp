#pragma once

#include <vector>

#include "lsf/crystal.hpp"
#include "lsf/types.hpp"

namespace lsf {

/// Drive tones shared by all ions. Only the sine quadrature is used, so each
/// tone contributes one real amplitude per ion.
struct ToneGrid {
  double gate_time = 0.0;
  std::vector<long> harmonics;  ///< h_m with tone_freqs(m) = 2 pi h_m / T; empty for custom tones
  Vec tone_freqs;               ///< angular frequencies, ascending
  double margin = 0.0;

  int size() const { return static_cast<int>(tone_freqs.size()); }
  bool is_harmonic() const { return !harmonics.empty(); }
};

/// Default band padding and near-mode window, both 2 pi k / T.
inline double default_margin(double gate_time) { return 3.0 * kTwoPi / gate_time; }
inline double default_window(double gate_time) { return 4.0 * kTwoPi / gate_time; }

/// All harmonics 2 pi h / T inside [nu_min - margin, nu_max + margin].
ToneGrid build_tone_grid(const IonCrystal& crystal, double gate_time, double margin);

/// Keeps only tones within `window` of some mode frequency.
ToneGrid restrict_tones_near_modes(const ToneGrid& grid, const IonCrystal& crystal, double window);

/// Arbitrary (not necessarily harmonic) tone set.
ToneGrid custom_tones(double gate_time, std::vector<double> tone_freqs);

/// Sine closure rows L(j, m) = int_0^T sin(nu_j t) sin(omega_m t) dt, in units of T.
Mat build_l_matrix(const IonCrystal& crystal, const ToneGrid& grid);

/// Full displacement-closure matrix: the sine rows of build_l_matrix stacked on
/// the matching cosine rows int_0^T cos(nu_j t) sin(omega_m t) dt, plus any
/// `extra_rows` (robustness constraints). Units of T.
Mat build_closure_matrix(const IonCrystal& crystal, const ToneGrid& grid, const Mat& extra_rows = Mat());

/// Orthonormal null-space basis of a constraint matrix.
struct KernelBasis {
  Mat l_matrix;  ///< the constraint matrix the kernel was taken of
  Mat basis;     ///< M x K, orthonormal columns spanning ker(l_matrix)
  double tolerance = 0.0;

  int raw_dim() const { return static_cast<int>(basis.rows()); }
  int dim() const { return static_cast<int>(basis.cols()); }
};

inline constexpr double kDefaultKernelTolerance = 1e-9;

/// SVD null space: singular values below tolerance * sigma_max count as zero.
/// Throws InfeasibleError when the kernel is trivial.
KernelBasis kernel_basis(const Mat& l_matrix, double tolerance = kDefaultKernelTolerance);

}  // namespace lsf
