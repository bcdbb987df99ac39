#include "lsf/crystal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace lsf {

namespace {

constexpr double kCoulombConstant = 2.307077552e-28;  // e^2 / (4 pi eps0), J m
constexpr double kAtomicMass = 1.66053906660e-27;     // kg
constexpr double kHbar = 1.054571817e-34;             // J s

void fix_sign(Eigen::Ref<Vec> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-9) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

void CrystalConfig::validate() const {
  if (n_ions < 2) throw ConfigError("crystal: n_ions must be at least 2");
  if (!(spacing > 0.0)) throw ConfigError("crystal: spacing must be positive");
  if (!(mode_freq_low > 0.0) || !(mode_freq_low < mode_freq_high))
    throw ConfigError("crystal: need 0 < mode_freq_low < mode_freq_high");
  if (!(ion_mass_amu > 0.0)) throw ConfigError("crystal: ion mass must be positive");
  if (!(drive_wavenumber > 0.0)) throw ConfigError("crystal: drive wavenumber must be positive");
  if (coulomb_coupling && !(*coulomb_coupling > 0.0))
    throw ConfigError("crystal: coulomb_coupling must be positive");
}

double coulomb_coupling(const CrystalConfig& config) {
  if (config.coulomb_coupling) return *config.coulomb_coupling;
  const double mass = config.ion_mass_amu * kAtomicMass;
  const double trap = kTwoPi * config.mode_freq_high;
  return kCoulombConstant / (mass * std::pow(config.spacing, 3)) / (trap * trap);
}

int IonCrystal::com_mode() const {
  Eigen::Index best = 0;
  participation.colwise().sum().cwiseAbs().maxCoeff(&best);
  return static_cast<int>(best);
}

IonCrystal build_crystal(const CrystalConfig& config) {
  config.validate();
  const int n = config.n_ions;
  const double c = coulomb_coupling(config);

  // Transverse Hessian in units of the trap frequency squared.
  Mat hessian = Mat::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < n; ++p) {
      if (p == i) continue;
      const double k = c / std::pow(std::abs(i - p), 3);
      hessian(i, p) = k;
      hessian(i, i) -= k;
    }
  }

  Eigen::SelfAdjointEigenSolver<Mat> eig(hessian);
  if (eig.info() != Eigen::Success) throw NumericalError("crystal: eigensolver failed");
  const Vec& lambda = eig.eigenvalues();
  if (lambda.minCoeff() <= 0.0)
    throw NumericalError("unstable crystal: transverse Hessian is not positive definite "
                         "(trap frequency too low for the Coulomb coupling c = " +
                         std::to_string(c) + ")");

  Mat vectors = eig.eigenvectors();
  for (int j = 0; j < n; ++j) fix_sign(vectors.col(j));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (lambda(a) != lambda(b)) return lambda(a) < lambda(b);
    const auto va = vectors.col(a), vb = vectors.col(b);
    return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
  });

  Vec raw(n);
  Mat participation(n, n);
  for (int j = 0; j < n; ++j) {
    raw(j) = std::sqrt(lambda(order[j]));
    participation.col(j) = vectors.col(order[j]);
  }

  const double lo = kTwoPi * config.mode_freq_low;
  const double hi = kTwoPi * config.mode_freq_high;
  const double span = raw(n - 1) - raw(0);
  if (!(span > 0.0)) throw NumericalError("crystal: degenerate mode band");

  IonCrystal crystal;
  crystal.config = config;
  crystal.mode_freqs = ((raw.array() - raw(0)) / span * (hi - lo) + lo).matrix();
  crystal.mode_freqs(0) = lo;
  crystal.mode_freqs(n - 1) = hi;
  crystal.participation = std::move(participation);

  const double mass = config.ion_mass_amu * kAtomicMass;
  crystal.lamb_dicke =
      (config.drive_wavenumber * (kHbar / (2.0 * mass * crystal.mode_freqs.array())).sqrt()).matrix();
  return crystal;
}

double min_mode_gap(const Vec& mode_freqs, std::span<const int> used_modes) {
  std::vector<double> freqs;
  if (used_modes.empty()) {
    freqs.assign(mode_freqs.begin(), mode_freqs.end());
  } else {
    for (int j : used_modes) {
      if (j < 0 || j >= mode_freqs.size()) throw ConfigError("min_mode_gap: mode index out of range");
      freqs.push_back(mode_freqs(j));
    }
  }
  if (freqs.size() < 2) throw ConfigError("min_mode_gap: need at least two used modes");
  std::sort(freqs.begin(), freqs.end());
  double gap = freqs[1] - freqs[0];
  for (std::size_t i = 2; i < freqs.size(); ++i) gap = std::min(gap, freqs[i] - freqs[i - 1]);
  return gap;
}

double min_mode_gap(const IonCrystal& crystal, std::span<const int> used_modes) {
  return min_mode_gap(crystal.mode_freqs, used_modes);
}

double min_gate_time(const IonCrystal& crystal, std::span<const int> used_modes) {
  const double gap = min_mode_gap(crystal, used_modes);
  if (!(gap > 0.0)) throw NumericalError("min_gate_time: degenerate modes");
  return kTwoPi / gap;
}

}  // namespace lsf
