#include "lsf/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lsf/integrals.hpp"

namespace lsf {

namespace {

// Guard integer rounding of T * f against representation error, e.g.
// 3e6 * 0.0129 evaluating to 38700.000000000004.
long ceil_index(double x) { return static_cast<long>(std::ceil(x - 1e-9 * std::max(1.0, std::abs(x)))); }
long floor_index(double x) { return static_cast<long>(std::floor(x + 1e-9 * std::max(1.0, std::abs(x)))); }

}  // namespace

ToneGrid build_tone_grid(const IonCrystal& crystal, double gate_time, double margin) {
  if (!(gate_time > 0.0)) throw ConfigError("tone grid: gate_time must be positive");
  if (!(margin >= 0.0)) throw ConfigError("tone grid: margin must be non-negative");

  const double lo = crystal.mode_freqs.minCoeff() - margin;
  const double hi = crystal.mode_freqs.maxCoeff() + margin;
  const long h_lo = std::max<long>(1, ceil_index(lo * gate_time / kTwoPi));
  const long h_hi = floor_index(hi * gate_time / kTwoPi);
  if (h_hi < h_lo) {
    std::ostringstream msg;
    msg << "tone grid: no harmonic of 2pi/T falls in the padded band; T must be at least "
        << kTwoPi / hi << " s (got " << gate_time << " s)";
    throw InfeasibleError(msg.str());
  }

  ToneGrid grid;
  grid.gate_time = gate_time;
  grid.margin = margin;
  grid.harmonics.reserve(static_cast<std::size_t>(h_hi - h_lo + 1));
  for (long h = h_lo; h <= h_hi; ++h) grid.harmonics.push_back(h);
  grid.tone_freqs.resize(static_cast<Eigen::Index>(grid.harmonics.size()));
  for (std::size_t m = 0; m < grid.harmonics.size(); ++m)
    grid.tone_freqs(static_cast<Eigen::Index>(m)) = kTwoPi * static_cast<double>(grid.harmonics[m]) / gate_time;
  return grid;
}

ToneGrid restrict_tones_near_modes(const ToneGrid& grid, const IonCrystal& crystal, double window) {
  if (!(window > 0.0)) throw ConfigError("tone restriction: window must be positive");
  ToneGrid out;
  out.gate_time = grid.gate_time;
  out.margin = grid.margin;
  std::vector<double> kept;
  for (int m = 0; m < grid.size(); ++m) {
    const double w = grid.tone_freqs(m);
    const double dist = (crystal.mode_freqs.array() - w).abs().minCoeff();
    // Relative slack so tones exactly `window` away survive rounding.
    if (dist <= window * (1.0 + 1e-12)) {
      kept.push_back(w);
      if (grid.is_harmonic()) out.harmonics.push_back(grid.harmonics[static_cast<std::size_t>(m)]);
    }
  }
  if (kept.empty()) throw InfeasibleError("tone restriction: no tone lies within the window of any mode");
  out.tone_freqs = Eigen::Map<const Vec>(kept.data(), static_cast<Eigen::Index>(kept.size()));
  return out;
}

ToneGrid custom_tones(double gate_time, std::vector<double> tone_freqs) {
  if (!(gate_time > 0.0)) throw ConfigError("custom tones: gate_time must be positive");
  if (tone_freqs.empty()) throw ConfigError("custom tones: empty tone list");
  std::sort(tone_freqs.begin(), tone_freqs.end());
  if (std::adjacent_find(tone_freqs.begin(), tone_freqs.end()) != tone_freqs.end())
    throw ConfigError("custom tones: duplicate tone frequency");
  ToneGrid grid;
  grid.gate_time = gate_time;
  grid.tone_freqs = Eigen::Map<const Vec>(tone_freqs.data(), static_cast<Eigen::Index>(tone_freqs.size()));
  return grid;
}

Mat build_l_matrix(const IonCrystal& crystal, const ToneGrid& grid) {
  const int n = crystal.size();
  const int m = grid.size();
  const double t = grid.gate_time;
  Mat l(n, m);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < m; ++k)
      l(j, k) = integrals::sine_sine_overlap(crystal.mode_freqs(j) * t, grid.tone_freqs(k) * t);
  return l;
}

Mat build_closure_matrix(const IonCrystal& crystal, const ToneGrid& grid, const Mat& extra_rows) {
  const int n = crystal.size();
  const int m = grid.size();
  const double t = grid.gate_time;
  if (extra_rows.size() > 0 && extra_rows.cols() != m)
    throw ConfigError("closure matrix: extra rows must have one column per tone");
  Mat l(2 * n + extra_rows.rows(), m);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < m; ++k) {
      const cplx r = integrals::drive_response(crystal.mode_freqs(j) * t, grid.tone_freqs(k) * t, 1.0);
      l(j, k) = r.imag();
      l(n + j, k) = r.real();
    }
  }
  if (extra_rows.rows() > 0) l.bottomRows(extra_rows.rows()) = extra_rows;
  return l;
}

KernelBasis kernel_basis(const Mat& l_matrix, double tolerance) {
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ConfigError("kernel basis: tolerance must lie in (0, 1)");
  const Eigen::Index m = l_matrix.cols();
  if (m == 0) throw ConfigError("kernel basis: constraint matrix has no columns");

  KernelBasis kb;
  kb.l_matrix = l_matrix;
  kb.tolerance = tolerance;

  if (l_matrix.rows() == 0 || l_matrix.cwiseAbs().maxCoeff() == 0.0) {
    kb.basis = Mat::Identity(m, m);
    return kb;
  }

  Eigen::BDCSVD<Mat> svd(l_matrix, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  const double cutoff = tolerance * sv(0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  const Eigen::Index k = m - rank;
  if (k == 0)
    throw InfeasibleError("kernel basis: the closure constraints leave no free direction; "
                          "add tones (wider margin/window) or lengthen the gate time");
  kb.basis = svd.matrixV().rightCols(k);
  // Deterministic column signs.
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index idx = 0;
    kb.basis.col(c).cwiseAbs().maxCoeff(&idx);
    if (kb.basis(idx, c) < 0.0) kb.basis.col(c) *= -1.0;
  }
  return kb;
}

}  // namespace lsf
