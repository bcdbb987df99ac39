#include "lsf/analysis.hpp"

#include <cmath>

namespace lsf {

void EstimatorConfig::validate() const {
  if (!(k_nuc > 0.0)) throw ConfigError("estimator: k_nuc must be positive");
  if (!(exponent > 0.0 && exponent < 1.0)) throw ConfigError("estimator: exponent must lie in (0, 1)");
}

TargetMatrix realized_phases(const CouplingSet& set, const Vec& coords) {
  return target_from_matrix(pair_phases(set, coords), "realized");
}

double infidelity(const Mat& actual, const Mat& ideal, bool ordered) {
  if (actual.rows() != ideal.rows() || actual.cols() != ideal.cols())
    throw ConfigError("infidelity: phase matrices differ in size");
  double sum = 0.0;
  for (Eigen::Index n = 0; n < actual.rows(); ++n)
    for (Eigen::Index m = n + 1; m < actual.cols(); ++m) {
      const double d = ideal(n, m) - actual(n, m);
      sum += d * d;
    }
  return ordered ? 2.0 * sum : sum;
}

double nuclear_norm_abs(const Mat& phases) {
  if (phases.size() == 0) return 0.0;
  const Mat a = phases.cwiseAbs();
  // |phi| is symmetric, so its singular values are the absolute eigenvalues.
  Eigen::SelfAdjointEigenSolver<Mat> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().sum();
}

double nuclear_norm_estimate(const TargetMatrix& target, const IonCrystal& crystal, double gate_time,
                             const EstimatorConfig& config) {
  config.validate();
  if (!(gate_time > 0.0)) throw ConfigError("estimate: gate time must be positive");
  const double nuc = nuclear_norm_abs(target.phases);
  const double n = target.size();
  return config.k_nuc * std::pow(n * nuc, config.exponent) /
         (std::sqrt(kTwoPi) * crystal.mean_lamb_dicke() * gate_time);
}

double ms_reference_rabi(double phi, double eta, double gate_time) {
  if (!(eta > 0.0) || !(gate_time > 0.0)) throw ConfigError("ms reference: eta and gate time must be positive");
  return std::sqrt(std::abs(phi)) / (std::sqrt(kTwoPi) * eta * gate_time);
}

Vec mode_variance(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes, double tau) {
  const CMat alpha = displacement_trajectory(crystal, grid, amplitudes, tau);
  return 4.0 * alpha.real().cwiseAbs2().rowwise().sum();
}

Vec ion_variances(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes, double tau) {
  return crystal.participation.cwiseAbs2() * mode_variance(crystal, grid, amplitudes, tau);
}

double ion_variance(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes, int ion, double tau) {
  if (ion < 0 || ion >= crystal.size()) throw ConfigError("ion_variance: ion index out of range");
  return ion_variances(crystal, grid, amplitudes, tau)(ion);
}

double overlap(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ConfigError("overlap: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::min(1.0, std::abs(a.dot(b)) / (na * nb));
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw NumericalError("fit_line: x values are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

}  // namespace lsf
