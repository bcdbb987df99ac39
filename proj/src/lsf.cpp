#include "lsf/lsf.hpp"

#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <optional>

#include "lsf/analysis.hpp"
#include "lsf/parallel.hpp"

namespace lsf {

namespace {

constexpr double kPinvCutoff = 1e-10;

// Minimum-norm (lightly ridge-regularized) solution of a d = rhs through the
// Gram matrix. Pair Jacobians are block sparse, so the Gram product goes
// through a sparse view when that pays off.
std::optional<Vec> min_norm_solve(const Mat& a, const Vec& rhs) {
  const Eigen::Index nnz = (a.array() != 0.0).count();
  Mat gram;
  if (nnz < a.size() / 4) {
    const Eigen::SparseMatrix<double> s = a.sparseView();
    gram = Mat(s * s.transpose());
  } else {
    gram = a * a.transpose();
  }
  const double scale = gram.diagonal().maxCoeff();
  if (!(scale > 0.0)) return std::nullopt;
  gram.diagonal().array() += 1e-14 * scale;
  Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  Vec d = a.transpose() * ldlt.solve(rhs);
  if (!d.allFinite()) return std::nullopt;
  return d;
}

double pair_infidelity(const Vec& values, const Vec& phi, bool ordered) {
  const double s = (values - phi).squaredNorm();
  return ordered ? 2.0 * s : s;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("solver: epsilon must be positive");
  if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("solver: delta must lie in [0, 1)");
  if (max_iters < 0 || polish_iters < 0) throw ConfigError("solver: iteration limits must be non-negative");
  if (stall_patience < 1) throw ConfigError("solver: stall_patience must be at least 1");
  if (!(infidelity_threshold > 0.0)) throw ConfigError("solver: infidelity_threshold must be positive");
}

Vec expand_global(const Vec& z_global, int ions) {
  if (ions < 1) throw ConfigError("expand_global: need at least one ion");
  const Eigen::Index k = z_global.size();
  Vec out(k * ions);
  for (int n = 0; n < ions; ++n) out.segment(n * k, k) = z_global;
  const double norm = out.norm();
  return norm > 0.0 ? Vec(out / norm) : out;
}

Vec stacked_coords(const ZeroPhaseSolution& z, int ions) {
  return z.ansatz == Ansatz::global ? expand_global(z.coords, ions) : z.coords;
}

Vec linear_deviation(const ConstraintSystem& pairs, const Vec& z, const Vec& phi) {
  if (phi.size() != pairs.count()) throw ConfigError("conversion: target length mismatch");
  if (phi.cwiseAbs().maxCoeff() == 0.0) return Vec::Zero(z.size());
  const Mat m = pairs.jacobian(z);
  Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double cutoff = kPinvCutoff * sv(0);
  Vec coeff = svd.matrixU().transpose() * phi;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) {
      coeff(i) /= sv(i);
      ++rank;
    } else {
      coeff(i) = 0.0;
    }
  }
  const Vec u = svd.matrixV() * coeff;
  if (rank < pairs.count() && (m * u - phi).norm() > 1e-6 * phi.norm())
    throw InfeasibleError("conversion: linearized system is rank deficient for this target (unusable pool entry)");
  return u;
}

double choose_lambda(const ConstraintSystem& pairs, const Vec& u, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("choose_lambda: epsilon must be positive");
  const Vec q = pairs.values(u);
  const double worst = q.size() ? q.cwiseAbs().maxCoeff() : 0.0;
  if (worst == 0.0) return 1.0;
  return std::sqrt(worst / epsilon);
}

double choose_lambda(const CouplingSet& set, const Vec& z, const TargetMatrix& target, double epsilon) {
  const PairConstraints pairs(set);
  return choose_lambda(pairs, linear_deviation(pairs, z, pair_vector(target.phases)), epsilon);
}

DriveSolution make_solution(const CouplingSet& set, const Vec& coords, const TargetMatrix& target,
                            const SolverConfig& config) {
  DriveSolution s;
  s.coords = coords;
  s.amplitudes = expand_amplitudes(*set.kernel, coords, set.ions());
  s.total_rabi = coords.norm();
  s.infidelity = infidelity(pair_phases(set, coords), target.phases, config.ordered_infidelity);
  return s;
}

DriveSolution convert(const CouplingSet& set, const Vec& z, const TargetMatrix& target, const SolverConfig& config) {
  config.validate();
  if (target.size() != set.ions()) throw ConfigError("conversion: target size differs from the crystal");
  if (z.size() != static_cast<Eigen::Index>(set.ions()) * set.dim())
    throw ConfigError("conversion: zero-phase vector has the wrong length");
  const PairConstraints pairs(set);
  const Vec u = linear_deviation(pairs, z, pair_vector(target.phases));
  const double lambda = choose_lambda(pairs, u, config.epsilon);
  DriveSolution s = make_solution(set, lambda * z + u / lambda, target, config);
  s.lambda = lambda;
  s.converted_infidelity = s.infidelity;
  s.converted_rabi = s.total_rabi;
  return s;
}

DriveSolution refine(const CouplingSet& set, const DriveSolution& start, const TargetMatrix& target,
                     const SolverConfig& config) {
  config.validate();
  const PairConstraints pairs(set);
  const Vec phi = pair_vector(target.phases);
  const bool ordered = config.ordered_infidelity;
  const int p = pairs.count();

  Vec r = start.coords;
  Vec vals = pairs.values(r);
  double inf = pair_infidelity(vals, phi, ordered);
  const double input_inf = inf;
  const double bound = std::max(config.infidelity_threshold, input_inf);

  std::vector<double> trace{r.norm()};
  bool warning = false;
  int iterations = 0;
  double delta = config.delta;
  int stall_budget = 4 * config.stall_patience;
  Mat a(p + 1, pairs.dim());
  Vec rhs(p + 1);

  // Descent: request a norm reduction of delta |r| per step while following
  // the linearized constraints; only shrinking, in-bound steps are accepted.
  if (delta > 0.0 && r.norm() > 0.0) {
    while (iterations < config.max_iters) {
      ++iterations;
      const double norm = r.norm();
      a.topRows(p) = pairs.jacobian(r);
      a.bottomRows(1) = r.transpose() / norm;
      rhs.head(p) = phi - vals;
      rhs(p) = -delta * norm;
      const auto d = min_norm_solve(a, rhs);
      if (!d) {
        warning = true;
        break;
      }
      const Vec trial = r + *d;
      const Vec tv = pairs.values(trial);
      const double ti = pair_infidelity(tv, phi, ordered);
      if (trial.norm() <= norm && ti <= bound) {
        r = trial;
        vals = tv;
        inf = ti;
        trace.push_back(r.norm());
        delta = std::min(config.max_delta, 1.5 * delta);
        stall_budget = 4 * config.stall_patience;  // counts consecutive rejections only
        const int k = static_cast<int>(trace.size());
        if (k > config.stall_patience) {
          const double old = trace[static_cast<std::size_t>(k - 1 - config.stall_patience)];
          if ((old - trace.back()) < config.stall_tolerance * old) break;
        }
      } else {
        delta *= 0.5;
        if (delta < config.delta / 64.0) break;
        --stall_budget;
        if (stall_budget < 0) break;
      }
    }
  }

  // Feasibility polish (delta = 0). Kept out of the descent trace: close to
  // the optimum, restoring the constraints may change |r| slightly.
  const double descent_norm = r.norm();
  for (int k = 0; k < config.polish_iters && inf > config.polish_target; ++k) {
    if (!(r.norm() > 0.0)) break;
    const auto d = min_norm_solve(pairs.jacobian(r), phi - vals);
    if (!d) {
      warning = true;
      break;
    }
    const Vec trial = r + *d;
    const Vec tv = pairs.values(trial);
    const double ti = pair_infidelity(tv, phi, ordered);
    if (!(ti < inf)) break;
    r = trial;
    vals = tv;
    inf = ti;
    ++iterations;
  }

  DriveSolution out;
  if (inf <= input_inf) {
    out = make_solution(set, r, target, config);
    out.rabi_trace = std::move(trace);
    out.polish_change = descent_norm > 0.0 ? r.norm() / descent_norm - 1.0 : 0.0;
  } else {
    out = make_solution(set, start.coords, target, config);
    out.rabi_trace = {start.coords.norm()};
    out.note = "refinement did not improve the input";
  }
  out.lambda = start.lambda;
  out.origin = start.origin;
  out.converted_infidelity = start.converted_infidelity;
  out.converted_rabi = start.converted_rabi;
  out.iterations = iterations;
  out.warning = warning;
  if (warning && out.note.empty()) out.note = "linear solve failed during refinement";
  return out;
}

std::vector<DriveSolution> solve(const SolutionPool& pool, const CouplingSet& set, const TargetMatrix& target,
                                 const SolverConfig& config, bool do_refine) {
  config.validate();
  if (pool.entries.empty()) throw InfeasibleError("solve: the pool is empty");
  const int count = static_cast<int>(pool.entries.size());
  std::vector<std::optional<DriveSolution>> results(static_cast<std::size_t>(count));
  parallel_for(count, [&](int i) {
    const Vec z = stacked_coords(pool.entries[static_cast<std::size_t>(i)], set.ions());
    if (z.size() != static_cast<Eigen::Index>(set.ions()) * set.dim())
      throw ConfigError("solve: pool entry dimension does not match the couplings");
    try {
      DriveSolution s = convert(set, z, target, config);
      s.origin = i;
      if (do_refine) s = refine(set, s, target, config);
      results[static_cast<std::size_t>(i)] = std::move(s);
    } catch (const InfeasibleError&) {
      // unusable entry
    }
  });
  std::vector<DriveSolution> out;
  for (auto& r : results)
    if (r) out.push_back(std::move(*r));
  if (out.empty()) throw InfeasibleError("solve: no pool entry could be converted to this target");
  const double thr = config.infidelity_threshold;
  std::stable_sort(out.begin(), out.end(), [thr](const DriveSolution& a, const DriveSolution& b) {
    const bool fa = a.infidelity <= thr, fb = b.infidelity <= thr;
    if (fa != fb) return fa;
    if (fa) return a.total_rabi < b.total_rabi;
    return a.infidelity < b.infidelity;
  });
  return out;
}

Mat raw_pair_phases(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes) {
  const int n = crystal.size();
  if (amplitudes.rows() != n || amplitudes.cols() != grid.size())
    throw ConfigError("raw_pair_phases: amplitude matrix must be ions x tones");
  Mat phases = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const Mat g = amplitudes * mode_form(crystal.mode_freqs(j), grid) * amplitudes.transpose();
    const double eta = crystal.lamb_dicke(j);
    const Vec oj = crystal.participation.col(j);
    phases -= eta * eta * (oj * oj.transpose()).cwiseProduct(g);
  }
  phases = 0.5 * (phases + phases.transpose());
  phases.diagonal().setZero();
  return phases;
}

AdiabaticDesign adiabatic_solution(const IonCrystal& crystal, const TargetMatrix& target, double gate_time,
                                   double min_gap_product) {
  const int n = crystal.size();
  if (target.size() != n) throw ConfigError("adiabatic: target size differs from the crystal");
  if (!(gate_time > 0.0)) throw ConfigError("adiabatic: gate time must be positive");
  const double product = min_mode_gap(crystal) * gate_time;
  if (product < min_gap_product)
    throw InfeasibleError("adiabatic: smallest mode gap times T is " + std::to_string(product) + ", need at least " +
                          std::to_string(min_gap_product));

  struct Tone {
    double freq;
    int a, b;
    double phi;
  };
  std::vector<Tone> tones;
  const int com = crystal.com_mode();
  int used_mode = com;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double phi = target.phases(a, b);
      if (phi == 0.0) continue;
      int mode = com;
      if (std::abs(crystal.participation(a, com) * crystal.participation(b, com)) < 1e-6) {
        Eigen::Index best = 0;
        crystal.participation.row(a).cwiseProduct(crystal.participation.row(b)).cwiseAbs().maxCoeff(&best);
        mode = static_cast<int>(best);
      }
      used_mode = mode;
      const double s = static_cast<double>(n * (a + 1) + (b + 1));
      tones.push_back({crystal.mode_freqs(mode) + kTwoPi * s / gate_time, a, b, phi});
    }

  AdiabaticDesign design;
  design.mode = used_mode;
  design.gap_product = product;
  if (tones.empty()) {
    // Zero target: a single silent tone keeps the shapes well defined.
    design.grid = std::make_shared<const ToneGrid>(
        custom_tones(gate_time, {crystal.mode_freqs(com) + kTwoPi * (n + 2) / gate_time}));
    design.amplitudes = Mat::Zero(n, 1);
    return design;
  }
  std::sort(tones.begin(), tones.end(), [](const Tone& x, const Tone& y) { return x.freq < y.freq; });
  std::vector<double> freqs;
  for (const auto& t : tones) freqs.push_back(t.freq);
  design.grid = std::make_shared<const ToneGrid>(custom_tones(gate_time, freqs));
  design.amplitudes = Mat::Zero(n, static_cast<Eigen::Index>(tones.size()));

  for (std::size_t k = 0; k < tones.size(); ++k) {
    const Tone& t = tones[k];
    const double w = t.freq * gate_time;
    double kappa = 0.0;
    for (int j = 0; j < n; ++j) {
      const double eta = crystal.lamb_dicke(j);
      const double x = crystal.mode_freqs(j) * gate_time;
      // Long-time limit of the diagonal mode form: (1/(w - x) - 1/(w + x)) / 2.
      kappa -= eta * eta * crystal.participation(t.a, j) * crystal.participation(t.b, j) * 0.5 *
               (1.0 / (w - x) - 1.0 / (w + x));
    }
    if (kappa == 0.0) throw NumericalError("adiabatic: tone does not couple the pair");
    const double amp = std::sqrt(std::abs(t.phi / kappa));
    design.amplitudes(t.a, static_cast<Eigen::Index>(k)) = amp;
    design.amplitudes(t.b, static_cast<Eigen::Index>(k)) = (t.phi * kappa > 0.0 ? 1.0 : -1.0) * amp;
  }
  return design;
}

}  // namespace lsf
