#include "lsf/coupling.hpp"

#include <string>

#include "lsf/integrals.hpp"
#include "lsf/parallel.hpp"

namespace lsf {

Mat mode_form(double nu, const ToneGrid& grid) {
  const int m = grid.size();
  const double t = grid.gate_time;
  const double x = nu * t;
  Mat a(m, m);
  for (int p = 0; p < m; ++p) {
    const double ap = grid.tone_freqs(p) * t;
    for (int q = p; q < m; ++q) {
      const double v = integrals::mode_form_entry(x, ap, grid.tone_freqs(q) * t);
      a(p, q) = v;
      a(q, p) = v;
    }
  }
  return a;
}

double CouplingSet::pair_weight(int j, int n, int m) const {
  const double eta = crystal->lamb_dicke(j);
  return -eta * eta * crystal->participation(n, j) * crystal->participation(m, j);
}

CouplingSet build_couplings(std::shared_ptr<const IonCrystal> crystal, std::shared_ptr<const ToneGrid> grid,
                            std::shared_ptr<const KernelBasis> kernel) {
  if (kernel->raw_dim() != grid->size())
    throw ConfigError("couplings: kernel basis does not match the tone grid");
  CouplingSet set;
  set.crystal = std::move(crystal);
  set.grid = std::move(grid);
  set.kernel = std::move(kernel);
  const int n = set.crystal->size();
  set.mode_forms.resize(static_cast<std::size_t>(n));
  const Mat& b = set.kernel->basis;
  parallel_for(n, [&](int j) {
    const Mat raw = mode_form(set.crystal->mode_freqs(j), *set.grid);
    Mat reduced = b.transpose() * raw * b;
    set.mode_forms[static_cast<std::size_t>(j)] = 0.5 * (reduced + reduced.transpose());
  });
  return set;
}

CouplingSet setup_couplings(const IonCrystal& crystal, double gate_time, double margin, double window,
                            double kernel_tolerance) {
  auto c = std::make_shared<const IonCrystal>(crystal);
  ToneGrid grid = build_tone_grid(crystal, gate_time, margin);
  if (window > 0.0) grid = restrict_tones_near_modes(grid, crystal, window);
  auto g = std::make_shared<const ToneGrid>(std::move(grid));
  auto k = std::make_shared<const KernelBasis>(kernel_basis(build_closure_matrix(crystal, *g), kernel_tolerance));
  return build_couplings(c, g, k);
}

Mat pair_coupling(const CouplingSet& set, int n, int m) {
  const int ions = set.ions();
  if (n < 0 || m < 0 || n >= ions || m >= ions) throw ConfigError("pair_coupling: ion index out of range");
  Mat a = Mat::Zero(set.dim(), set.dim());
  for (int j = 0; j < set.modes(); ++j) {
    const double w = set.pair_weight(j, n, m);
    if (w != 0.0) a += w * set.mode_forms[static_cast<std::size_t>(j)];
  }
  return a;
}

Mat assemble_constraint_form(const CouplingSet& set, int n, int m) {
  if (n == m) throw ConfigError("constraint form: diagonal pairs only contribute a global phase");
  if (n > m) throw ConfigError("constraint form: expected n < m");
  const int k = set.dim();
  const Mat a = pair_coupling(set, n, m);
  Mat f = Mat::Zero(static_cast<Eigen::Index>(set.ions()) * k, static_cast<Eigen::Index>(set.ions()) * k);
  f.block(n * k, m * k, k, k) = 0.5 * a;
  f.block(m * k, n * k, k, k) = 0.5 * a.transpose();
  return f;
}

Mat coords_matrix(const Vec& coords, int ions) {
  if (ions <= 0 || coords.size() % ions != 0) throw ConfigError("coordinates do not split evenly over the ions");
  return Eigen::Map<const Mat>(coords.data(), coords.size() / ions, ions);
}

Mat pair_phases(const CouplingSet& set, const Vec& coords) {
  const int ions = set.ions();
  if (coords.size() != static_cast<Eigen::Index>(ions) * set.dim())
    throw ConfigError("pair_phases: coordinate length mismatch");
  const Mat r = coords_matrix(coords, ions);
  const Mat& o = set.crystal->participation;
  Mat phases = Mat::Zero(ions, ions);
  for (int j = 0; j < set.modes(); ++j) {
    const Mat g = r.transpose() * (set.mode_forms[static_cast<std::size_t>(j)] * r);
    const double eta = set.crystal->lamb_dicke(j);
    const Vec oj = o.col(j);
    phases -= eta * eta * (oj * oj.transpose()).cwiseProduct(g);
  }
  phases = 0.5 * (phases + phases.transpose());
  phases.diagonal().setZero();
  return phases;
}

Mat expand_amplitudes(const KernelBasis& kernel, const Vec& coords, int ions) {
  return (kernel.basis * coords_matrix(coords, ions)).transpose();
}

CMat displacement_trajectory(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes, double tau) {
  const int n = crystal.size();
  const int m = grid.size();
  if (amplitudes.rows() != n || amplitudes.cols() != m)
    throw ConfigError("displacement: amplitude matrix must be ions x tones");
  const double t = grid.gate_time;
  CMat response(n, m);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < m; ++k)
      response(j, k) = integrals::drive_response(crystal.mode_freqs(j) * t, grid.tone_freqs(k) * t, tau);
  CMat alpha = response * amplitudes.transpose().cast<cplx>();  // (j, n)
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      alpha(j, i) *= cplx(0.0, -crystal.lamb_dicke(j) * crystal.participation(i, j));
  return alpha;
}

DenseConstraints::DenseConstraints(std::vector<Mat> forms) : forms_(std::move(forms)) {
  if (forms_.empty()) throw ConfigError("dense constraints: no forms");
  for (auto& f : forms_) {
    if (f.rows() != f.cols() || f.rows() != forms_.front().rows())
      throw ConfigError("dense constraints: forms must be square and of equal size");
    f = 0.5 * (f + f.transpose()).eval();
  }
}

int DenseConstraints::dim() const { return static_cast<int>(forms_.front().rows()); }
int DenseConstraints::count() const { return static_cast<int>(forms_.size()); }

Vec DenseConstraints::values(const Vec& r) const {
  Vec v(count());
  for (int p = 0; p < count(); ++p) v(p) = r.dot(forms_[static_cast<std::size_t>(p)] * r);
  return v;
}

Mat DenseConstraints::jacobian(const Vec& r) const {
  Mat jac(count(), dim());
  for (int p = 0; p < count(); ++p) jac.row(p) = 2.0 * (forms_[static_cast<std::size_t>(p)] * r).transpose();
  return jac;
}

int ModeConstraints::dim() const { return set_->dim(); }
int ModeConstraints::count() const { return set_->modes(); }

Vec ModeConstraints::values(const Vec& r) const {
  Vec v(count());
  for (int j = 0; j < count(); ++j) v(j) = r.dot(set_->mode_forms[static_cast<std::size_t>(j)] * r);
  return v;
}

Mat ModeConstraints::jacobian(const Vec& r) const {
  Mat jac(count(), dim());
  for (int j = 0; j < count(); ++j) jac.row(j) = 2.0 * (set_->mode_forms[static_cast<std::size_t>(j)] * r).transpose();
  return jac;
}

PairConstraints::PairConstraints(const CouplingSet& set, double scale) : set_(&set), scale_(scale) {
  const int ions = set.ions();
  for (int n = 0; n < ions; ++n)
    for (int m = n + 1; m < ions; ++m) pairs_.emplace_back(n, m);
  weights_.resize(set.modes(), static_cast<Eigen::Index>(pairs_.size()));
  for (int j = 0; j < set.modes(); ++j)
    for (std::size_t p = 0; p < pairs_.size(); ++p)
      weights_(j, static_cast<Eigen::Index>(p)) = scale * set.pair_weight(j, pairs_[p].first, pairs_[p].second);
}

int PairConstraints::dim() const { return set_->ions() * set_->dim(); }
int PairConstraints::count() const { return static_cast<int>(pairs_.size()); }

int PairConstraints::index(int n, int m) const {
  const int ions = set_->ions();
  if (n >= m || n < 0 || m >= ions) throw ConfigError("pair index requires 0 <= n < m < N");
  return n * ions - n * (n + 1) / 2 + (m - n - 1);
}

Vec PairConstraints::values(const Vec& r) const { return scale_ * pair_vector(pair_phases(*set_, r)); }

Mat PairConstraints::jacobian(const Vec& r) const {
  const int ions = set_->ions();
  const int k = set_->dim();
  const Mat rm = coords_matrix(r, ions);
  Mat jac = Mat::Zero(count(), dim());
  for (int j = 0; j < set_->modes(); ++j) {
    const Mat y = set_->mode_forms[static_cast<std::size_t>(j)] * rm;  // K x N
    for (int p = 0; p < count(); ++p) {
      const double w = weights_(j, p);
      if (w == 0.0) continue;
      const auto [n, m] = pairs_[static_cast<std::size_t>(p)];
      jac.row(p).segment(n * k, k) += w * y.col(m).transpose();
      jac.row(p).segment(m * k, k) += w * y.col(n).transpose();
    }
  }
  return jac;
}

Vec pair_vector(const Mat& phases) {
  const int ions = static_cast<int>(phases.rows());
  Vec v(ions * (ions - 1) / 2);
  int p = 0;
  for (int n = 0; n < ions; ++n)
    for (int m = n + 1; m < ions; ++m) v(p++) = phases(n, m);
  return v;
}

Mat pair_matrix(const Vec& values, int ions) {
  if (values.size() != ions * (ions - 1) / 2) throw ConfigError("pair_matrix: length mismatch");
  Mat out = Mat::Zero(ions, ions);
  int p = 0;
  for (int n = 0; n < ions; ++n)
    for (int m = n + 1; m < ions; ++m) out(n, m) = out(m, n) = values(p++);
  return out;
}

}  // namespace lsf
