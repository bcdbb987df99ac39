#pragma once

#include <memory>
#include <vector>

#include "lsf/crystal.hpp"
#include "lsf/spectrum.hpp"
#include "lsf/types.hpp"

namespace lsf {

/// Raw M x M mode form of a mode at angular frequency nu over the tone grid,
/// in units of T^2:
///   A(m, l) = -int_0^T dt1 int_0^t1 dt2 sin(nu (t1 - t2))
///             [sin(w_m t1) sin(w_l t2) + sin(w_m t2) sin(w_l t1)]
Mat mode_form(double nu, const ToneGrid& grid);

/// Kernel-reduced per-mode quadratic forms.
///
/// Drive coordinates are dimensionless (amplitude times T, with the Rabi
/// scale folded into the amplitude). The entangling phase between ions n < m
/// is r_n^T A_nm r_m with A_nm = -sum_j eta_j^2 O_j(n) O_j(m) mode_forms[j].
struct CouplingSet {
  std::shared_ptr<const IonCrystal> crystal;
  std::shared_ptr<const ToneGrid> grid;
  std::shared_ptr<const KernelBasis> kernel;
  std::vector<Mat> mode_forms;  ///< K x K, B^T A_j B

  int ions() const { return crystal->size(); }
  int modes() const { return static_cast<int>(mode_forms.size()); }
  int raw_dim() const { return grid->size(); }
  int dim() const { return kernel->dim(); }

  /// Weight of mode j in the (n, m) pair coupling: -eta_j^2 O_j(n) O_j(m).
  double pair_weight(int j, int n, int m) const;
};

/// Evaluates all mode forms (parallel over modes).
CouplingSet build_couplings(std::shared_ptr<const IonCrystal> crystal, std::shared_ptr<const ToneGrid> grid,
                            std::shared_ptr<const KernelBasis> kernel);

/// Convenience: grid, closure kernel and couplings for a gate time. The grid
/// is the padded harmonic grid restricted to `window` around the modes
/// (window <= 0 disables the restriction).
CouplingSet setup_couplings(const IonCrystal& crystal, double gate_time, double margin, double window,
                            double kernel_tolerance = kDefaultKernelTolerance);

/// K x K pair matrix A_nm.
Mat pair_coupling(const CouplingSet& set, int n, int m);

/// Symmetric NK x NK form F with r^T F r = r_n^T A_nm r_m. Requires n < m.
Mat assemble_constraint_form(const CouplingSet& set, int n, int m);

/// Stacked coordinates r = (r_1 .. r_N) viewed as the K x N matrix of columns.
Mat coords_matrix(const Vec& coords, int ions);

/// Phases r_n^T A_nm r_m for all pairs as a symmetric N x N matrix (zero diagonal).
Mat pair_phases(const CouplingSet& set, const Vec& coords);

/// N x M physical tone amplitudes: row n = (B r_n)^T.
Mat expand_amplitudes(const KernelBasis& kernel, const Vec& coords, int ions);

/// alpha(j, n) at fraction tau of the gate for raw N x M amplitudes:
///   alpha_j^(n)(tau T) = -i eta_j O_j(n) sum_m r_nm int_0^tau e^{i x_j s} sin(a_m s) ds
/// with x_j = nu_j T and a_m = w_m T.
CMat displacement_trajectory(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes, double tau);

/// A family of quadratic constraints c_p(r) = r^T Q_p r on a coordinate vector.
class ConstraintSystem {
 public:
  virtual ~ConstraintSystem() = default;
  virtual int dim() const = 0;
  virtual int count() const = 0;
  virtual Vec values(const Vec& r) const = 0;
  /// Rows are the gradients 2 Q_p r.
  virtual Mat jacobian(const Vec& r) const = 0;
};

/// Explicit symmetric forms; used for small problems and tests.
class DenseConstraints final : public ConstraintSystem {
 public:
  explicit DenseConstraints(std::vector<Mat> forms);
  int dim() const override;
  int count() const override;
  Vec values(const Vec& r) const override;
  Mat jacobian(const Vec& r) const override;

 private:
  std::vector<Mat> forms_;
};

/// Global ansatz: one shared K-vector z for every ion, constraints z^T A_j z
/// per mode (N constraints).
class ModeConstraints final : public ConstraintSystem {
 public:
  explicit ModeConstraints(const CouplingSet& set) : set_(&set) {}
  int dim() const override;
  int count() const override;
  Vec values(const Vec& r) const override;
  Mat jacobian(const Vec& r) const override;

 private:
  const CouplingSet* set_;
};

/// Multi-address ansatz: NK-vector, constraints scale * r_n^T A_nm r_m for
/// every pair n < m (ordered row-major).
class PairConstraints final : public ConstraintSystem {
 public:
  explicit PairConstraints(const CouplingSet& set, double scale = 1.0);
  int dim() const override;
  int count() const override;
  Vec values(const Vec& r) const override;
  Mat jacobian(const Vec& r) const override;

  double scale() const { return scale_; }
  /// Pair (n, m) of constraint index p.
  std::pair<int, int> pair(int p) const { return pairs_[static_cast<std::size_t>(p)]; }
  /// Constraint index of pair n < m.
  int index(int n, int m) const;

 private:
  const CouplingSet* set_;
  double scale_;
  std::vector<std::pair<int, int>> pairs_;
  Mat weights_;  ///< modes x pairs, scaled pair weights
};

/// Upper-triangle entries of a symmetric matrix in PairConstraints order.
Vec pair_vector(const Mat& phases);
Mat pair_matrix(const Vec& values, int ions);

}  // namespace lsf
