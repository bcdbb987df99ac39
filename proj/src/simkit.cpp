#include "lsf/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <boost/numeric/odeint.hpp>

#include "lsf/coupling.hpp"
#include "lsf/lsf.hpp"

namespace lsf {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<cplx>;

constexpr double kCutoffLimit = 1e-5;
constexpr double kTraceLimit = 1e-9;
constexpr int kTailStart = 11;  // levels n > 10
constexpr int kMonitorPoints = 101;
constexpr double kSpectralDrop = 1e-13;  // weight of rho eigenvectors left out of a carrier stage

int spin_dim(int ions) { return 1 << ions; }

// Spin value s_n = +1 for |+> (bit 0) and -1 for |-> (bit 1); qubit 0 is the top bit.
int spin_sign(int config, int ion, int ions) { return ((config >> (ions - 1 - ion)) & 1) ? -1 : 1; }

// H^{(x)N} applied to a Z-basis vector gives X-basis coordinates (and back).
CVec hadamard(const CVec& v, int ions) {
  CVec out = v;
  const int dim = spin_dim(ions);
  for (int h = 1; h < dim; h <<= 1)
    for (int i = 0; i < dim; i += 2 * h)
      for (int k = i; k < i + h; ++k) {
        const cplx a = out(k), b = out(k + h);
        out(k) = a + b;
        out(k + h) = a - b;
      }
  return out / std::sqrt(static_cast<double>(dim));
}

CMat hadamard_conj(const CMat& rho, int ions) {
  CMat tmp(rho.rows(), rho.cols());
  for (int c = 0; c < rho.cols(); ++c) tmp.col(c) = hadamard(rho.col(c), ions);
  CMat out(rho.rows(), rho.cols());
  for (int r = 0; r < rho.rows(); ++r) out.row(r) = hadamard(tmp.row(r).transpose(), ions).transpose();
  return out;
}

CVec initial_or_ground(const CVec& initial, int ions) {
  const int dim = spin_dim(ions);
  if (initial.size() == 0) {
    CVec g = CVec::Zero(dim);
    g(0) = 1.0;
    return g;
  }
  if (initial.size() != dim) throw ConfigError("simulate: initial state must have 2^N entries");
  const double norm = initial.norm();
  if (!(norm > 0.0)) throw ConfigError("simulate: initial state is zero");
  return initial / norm;
}

Vec xx_phase_per_config(const Mat& phases) {
  const int n = static_cast<int>(phases.rows());
  Vec theta = Vec::Zero(spin_dim(n));
  for (int s = 0; s < theta.size(); ++s)
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) theta(s) += phases(a, b) * spin_sign(s, a, n) * spin_sign(s, b, n);
  return theta;
}

// Everything one mode stage needs, in units of T.
struct Stage {
  int ions = 0;
  int cutoff = 0;
  double x = 0.0;       // nu_j T
  Vec tones;            // omega_m T
  Mat amps;             // N x M
  Vec coupling;         // eta_j O_jn
  Mat ladder;           // N x (cutoff-1): <k|B_n|k+1>
  double carrier_weight = 0.0;

  void drives(double tau, Vec& sine, Vec& cosine, bool want_cos) const {
    const int m = static_cast<int>(tones.size());
    Vec s(m), c(m);
    for (int k = 0; k < m; ++k) {
      s(k) = std::sin(tones(k) * tau);
      if (want_cos) c(k) = std::cos(tones(k) * tau);
    }
    sine = amps * s;
    if (want_cos) cosine = amps * c;
  }
};

Stage make_stage(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amps, int mode, const SimConfig& cfg) {
  Stage st;
  st.ions = crystal.size();
  st.cutoff = cfg.phonon_cutoff;
  st.x = crystal.mode_freqs(mode) * grid.gate_time;
  st.tones = grid.tone_freqs * grid.gate_time;
  st.amps = amps;
  st.coupling = crystal.lamb_dicke(mode) * crystal.participation.col(mode);
  st.ladder.resize(st.ions, st.cutoff - 1);
  for (int n = 0; n < st.ions; ++n) {
    const double e2 = st.coupling(n) * st.coupling(n);
    for (int k = 0; k + 1 < st.cutoff; ++k) {
      const double up = k + 1.0;
      st.ladder(n, k) = std::sqrt(up) * (cfg.debye_waller ? 1.0 - 0.5 * e2 * up : 1.0);
    }
  }
  st.carrier_weight = cfg.carrier ? 2.0 * cfg.carrier_scale / st.ions : 0.0;
  return st;
}

// Sideband part for all spin configurations at once: block s of `psi`
// (cutoff entries) evolves under sum_n s_n c_n(tau) (B_n e^{-ix tau} + h.c.).
void apply_sideband(const Stage& st, const Vec& drive, double tau, const cplx* psi, cplx* out, int configs,
                    std::vector<double>& weights) {
  const int nc = st.cutoff;
  const cplx down = std::polar(1.0, -st.x * tau);
  const cplx up = std::conj(down);
  Vec c = st.coupling.cwiseProduct(drive);
  weights.assign(static_cast<std::size_t>(nc - 1), 0.0);
  for (int s = 0; s < configs; ++s) {
    std::fill(weights.begin(), weights.end(), 0.0);
    for (int n = 0; n < st.ions; ++n) {
      const double cs = spin_sign(s, n, st.ions) * c(n);
      for (int k = 0; k + 1 < nc; ++k) weights[static_cast<std::size_t>(k)] += cs * st.ladder(n, k);
    }
    const cplx* p = psi + static_cast<std::ptrdiff_t>(s) * nc;
    cplx* o = out + static_cast<std::ptrdiff_t>(s) * nc;
    // -i H psi
    for (int k = 0; k < nc; ++k) {
      cplx acc = 0.0;
      if (k + 1 < nc) acc += weights[static_cast<std::size_t>(k)] * down * p[k + 1];
      if (k > 0) acc += weights[static_cast<std::size_t>(k - 1)] * up * p[k - 1];
      o[k] = cplx(acc.imag(), -acc.real());
    }
  }
}

struct StageRecord {
  std::vector<State> snapshots;  // per monitor time, configs x cutoff
  double trace_error = 0.0;
};

auto make_stepper(const SimConfig& cfg) {
  return odeint::make_controlled(cfg.abs_tol, cfg.rel_tol, odeint::runge_kutta_fehlberg78<State>());
}

double initial_dt(const Stage& st) {
  double fastest = st.x;
  if (st.tones.size() > 0) fastest += st.tones.cwiseAbs().maxCoeff();
  return std::min(1e-3, 0.05 / std::max(1.0, fastest));
}

// Ideal / Debye-Waller stage: every spin configuration starts in the vacuum.
StageRecord run_sideband_stage(const Stage& st, const std::vector<double>& times, const SimConfig& cfg) {
  const int configs = spin_dim(st.ions);
  const int nc = st.cutoff;
  State psi(static_cast<std::size_t>(configs * nc), cplx(0.0));
  for (int s = 0; s < configs; ++s) psi[static_cast<std::size_t>(s * nc)] = 1.0;

  std::vector<double> weights;
  Vec sine, cosine;
  auto rhs = [&](const State& y, State& dy, double tau) {
    st.drives(tau, sine, cosine, false);
    apply_sideband(st, sine, tau, y.data(), dy.data(), configs, weights);
  };
  StageRecord rec;
  auto observe = [&](const State& y, double) { rec.snapshots.push_back(y); };
  odeint::integrate_times(make_stepper(cfg), rhs, psi, times.begin(), times.end(), initial_dt(st), observe);
  for (int s = 0; s < configs; ++s) {
    double norm2 = 0.0;
    for (int k = 0; k < nc; ++k) norm2 += std::norm(rec.snapshots.back()[static_cast<std::size_t>(s * nc + k)]);
    rec.trace_error = std::max(rec.trace_error, std::abs(norm2 - 1.0));
  }
  return rec;
}

// Carrier stage: full spin x phonon propagation of the spin columns of
// `start` (X basis), each with the mode in the vacuum. Returns one block of
// configs x cutoff per column.
State run_carrier_stage(const Stage& st, const SimConfig& cfg, const CMat& start, const Vec& weights,
                        double& trace_error, Mat& level_pop) {
  const int configs = spin_dim(st.ions);
  const int nc = st.cutoff;
  const int cols = static_cast<int>(start.cols());
  const std::size_t block = static_cast<std::size_t>(configs * nc);
  State psi(block * cols, cplx(0.0));
  for (int c = 0; c < cols; ++c)
    for (int s = 0; s < configs; ++s) psi[c * block + static_cast<std::size_t>(s * nc)] = start(s, c);

  std::vector<double> ladder_weights;
  Vec sine, cosine;
  auto rhs = [&](const State& y, State& dy, double tau) {
    st.drives(tau, sine, cosine, true);
    for (int c = 0; c < cols; ++c) {
      const cplx* p = y.data() + c * block;
      cplx* o = dy.data() + c * block;
      apply_sideband(st, sine, tau, p, o, configs, ladder_weights);
      // -i w c_n sigma_y^n with <+|sigma_y|-> = i and <-|sigma_y|+> = -i,
      // so the plus component gains +w c_n psi(minus) and vice versa.
      for (int n = 0; n < st.ions; ++n) {
        const double amp = st.carrier_weight * cosine(n);
        if (amp == 0.0) continue;
        const int bit = 1 << (st.ions - 1 - n);
        for (int s = 0; s < configs; ++s) {
          const double term = (s & bit) ? -amp : amp;
          const cplx* src = p + static_cast<std::ptrdiff_t>(s ^ bit) * nc;
          cplx* dst = o + static_cast<std::ptrdiff_t>(s) * nc;
          for (int k = 0; k < nc; ++k) dst[k] += term * src[k];
        }
      }
    }
  };
  std::vector<double> times(kMonitorPoints);
  for (int i = 0; i < kMonitorPoints; ++i)
    times[static_cast<std::size_t>(i)] = static_cast<double>(i) / (kMonitorPoints - 1);
  level_pop = Mat::Zero(kMonitorPoints, nc);
  int sample = 0;
  auto observe = [&](const State& y, double) {
    for (int c = 0; c < cols; ++c)
      for (int s = 0; s < configs; ++s)
        for (int k = 0; k < nc; ++k)
          level_pop(sample, k) += weights(c) * std::norm(y[c * block + static_cast<std::size_t>(s * nc + k)]);
    ++sample;
  };
  odeint::integrate_times(make_stepper(cfg), rhs, psi, times.begin(), times.end(), initial_dt(st), observe);
  trace_error = 0.0;
  for (int c = 0; c < cols; ++c) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < block; ++i) norm2 += std::norm(psi[c * block + i]);
    trace_error = std::max(trace_error, std::abs(norm2 - 1.0));
  }
  return psi;
}

// Dominant eigenvectors of rho; the discarded weight is at most `drop`.
void spectral_columns(const CMat& rho, double drop, CMat& vectors, Vec& weights) {
  Eigen::SelfAdjointEigenSolver<CMat> es(rho);
  const Vec vals = es.eigenvalues();
  const int dim = static_cast<int>(vals.size());
  int keep = dim;
  double discarded = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double v = std::max(0.0, vals(i));
    if (discarded + v > drop) break;
    discarded += v;
    keep = dim - 1 - i;
  }
  keep = std::max(keep, 1);
  vectors = es.eigenvectors().rightCols(keep);
  weights = vals.tail(keep).cwiseMax(0.0);
}

std::vector<int> stage_order(const SimConfig& cfg, int ions) {
  std::vector<int> order = cfg.mode_order;
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(ions));
    std::iota(order.begin(), order.end(), 0);
  }
  return order;
}

}  // namespace

void SimConfig::validate(int ions) const {
  if (ions < 1) throw ConfigError("simulate: need at least one ion");
  if (ions > max_ions)
    throw ConfigError("simulate: " + std::to_string(ions) + " ions exceed the simulator limit of " +
                      std::to_string(max_ions));
  if (phonon_cutoff < kTailStart + 1) throw ConfigError("simulate: phonon cutoff must be at least 12");
  if (samples < 0) throw ConfigError("simulate: samples must be non-negative");
  if (!(rel_tol > 0.0 && abs_tol > 0.0)) throw ConfigError("simulate: tolerances must be positive");
  if (!std::isfinite(carrier_scale)) throw ConfigError("simulate: carrier_scale must be finite");
  if (!mode_order.empty()) {
    std::vector<int> sorted = mode_order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < ions; ++i)
      if (static_cast<int>(sorted.size()) != ions || sorted[static_cast<std::size_t>(i)] != i)
        throw ConfigError("simulate: mode order must be a permutation of 0..N-1");
  }
}

CVec ideal_state(const Mat& phases, const CVec& initial) {
  const int n = static_cast<int>(phases.rows());
  if (phases.cols() != n) throw ConfigError("ideal_state: phase matrix must be square");
  CVec x = hadamard(initial_or_ground(initial, n), n);
  const Vec theta = xx_phase_per_config(phases);
  for (int s = 0; s < x.size(); ++s) x(s) *= std::polar(1.0, theta(s));
  return hadamard(x, n);
}

SimulationResult simulate(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes,
                          const Mat& target_phases, const SimConfig& config) {
  const int n = crystal.size();
  config.validate(n);
  if (amplitudes.rows() != n || amplitudes.cols() != grid.size())
    throw ConfigError("simulate: amplitude matrix must be ions x tones");
  if (target_phases.rows() != n || target_phases.cols() != n)
    throw ConfigError("simulate: target phase matrix must be N x N");

  const int configs = spin_dim(n);
  const int nc = config.phonon_cutoff;
  const CVec init_x = hadamard(initial_or_ground(config.initial_state, n), n);
  CMat rho = init_x * init_x.adjoint();
  const Vec spin_weights = rho.diagonal().real();
  const std::vector<int> order = stage_order(config, n);

  SimulationResult res;
  res.carrier = config.carrier;
  res.debye_waller = config.debye_waller;

  auto account = [&](const Eigen::Ref<const Vec>& levels) {
    res.tail_population = std::max(res.tail_population, levels.tail(nc - kTailStart).sum());
    res.cutoff_population = std::max(res.cutoff_population, levels(nc - 1));
  };

  if (!config.carrier) {
    const int points = config.samples >= 2 ? config.samples : kMonitorPoints;
    std::vector<double> times(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) times[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
    // Per monitor time, the product over modes of <psi_s'|psi_s>.
    std::vector<CMat> overlap(static_cast<std::size_t>(points), CMat::Ones(configs, configs));
    Mat occupations = Mat::Zero(points, n);
    Mat excursions = Mat::Zero(points, n);
    for (int mode : order) {
      const Stage st = make_stage(crystal, grid, amplitudes, mode, config);
      const StageRecord rec = run_sideband_stage(st, times, config);
      if (static_cast<int>(rec.snapshots.size()) != points) throw NumericalError("simulate: integrator lost samples");
      res.trace_error = std::max(res.trace_error, rec.trace_error);
      for (int i = 0; i < points; ++i) {
        const auto& y = rec.snapshots[static_cast<std::size_t>(i)];
        Eigen::Map<const CMat> psi(y.data(), nc, configs);
        overlap[static_cast<std::size_t>(i)].array() *= (psi.adjoint() * psi).transpose().array();
        Vec levels = Vec::Zero(nc);
        for (int s = 0; s < configs; ++s) levels += spin_weights(s) * psi.col(s).cwiseAbs2();
        account(levels);
        for (int k = 1; k < nc; ++k) occupations(i, mode) += k * levels(k);
        // <(a + a^dagger)^2> - 1 in the interaction picture.
        double x2 = 0.0;
        for (int s = 0; s < configs; ++s) {
          for (int k = 0; k < nc; ++k) {
            cplx v = 0.0;
            if (k > 0) v += std::sqrt(static_cast<double>(k)) * psi(k - 1, s);
            if (k + 1 < nc) v += std::sqrt(static_cast<double>(k + 1)) * psi(k + 1, s);
            x2 += spin_weights(s) * std::norm(v);
          }
        }
        excursions(i, mode) = x2 - 1.0;
      }
    }
    rho = rho.cwiseProduct(overlap.back());
    if (config.samples >= 2) {
      res.times = times;
      res.mode_occupations = occupations;
      res.mode_excursions = excursions;
      res.populations.resize(points, configs);
      for (int i = 0; i < points; ++i) {
        const CMat rx = (init_x * init_x.adjoint()).cwiseProduct(overlap[static_cast<std::size_t>(i)]);
        res.populations.row(i) = hadamard_conj(rx, n).diagonal().real().transpose();
      }
    }
  } else {
    for (int mode : order) {
      const Stage st = make_stage(crystal, grid, amplitudes, mode, config);
      CMat vectors;
      Vec weights;
      spectral_columns(rho, kSpectralDrop, vectors, weights);
      double trace_error = 0.0;
      Mat level_pop;
      const State psi = run_carrier_stage(st, config, vectors, weights, trace_error, level_pop);
      res.trace_error = std::max(res.trace_error, trace_error);
      for (int i = 0; i < level_pop.rows(); ++i) account(level_pop.row(i).transpose());
      // rho' = sum_c w_c sum_k psi_c(., k) psi_c(., k)^dagger
      const std::size_t block = static_cast<std::size_t>(configs * nc);
      CMat next = CMat::Zero(configs, configs);
      for (int c = 0; c < vectors.cols(); ++c) {
        Eigen::Map<const CMat> out(psi.data() + c * block, nc, configs);
        next += weights(c) * (out.transpose() * out.conjugate());
      }
      rho = next;
    }
  }

  if (res.trace_error > kTraceLimit)
  {
    char buf[160];
    std::snprintf(buf, sizeof buf, "simulate: state norm drifted by %.3g (tolerance 1e-9); tighten the integrator tolerances",
                  res.trace_error);
    throw NumericalError(buf);
  }
  res.valid = res.cutoff_population <= kCutoffLimit;

  CVec ideal_x = init_x;
  const Vec theta = xx_phase_per_config(target_phases);
  for (int s = 0; s < configs; ++s) ideal_x(s) *= std::polar(1.0, theta(s));
  res.fidelity = std::real(ideal_x.dot(rho * ideal_x));
  res.rho = hadamard_conj(rho, n);
  return res;
}

AnalyticUnitary analytic_unitary(const IonCrystal& crystal, const ToneGrid& grid, const Mat& amplitudes) {
  AnalyticUnitary u;
  u.phases = raw_pair_phases(crystal, grid, amplitudes);
  u.alpha_T = displacement_trajectory(crystal, grid, amplitudes, 1.0);
  return u;
}

CMat analytic_density(const AnalyticUnitary& u, const CVec& initial) {
  const int n = static_cast<int>(u.phases.rows());
  const int configs = spin_dim(n);
  const CVec init_x = hadamard(initial_or_ground(initial, n), n);
  const Vec theta = xx_phase_per_config(u.phases);
  // beta(j, s) = sum_n s_n alpha_jn
  CMat beta(u.alpha_T.rows(), configs);
  for (int s = 0; s < configs; ++s) {
    CVec sign(n);
    for (int i = 0; i < n; ++i) sign(i) = static_cast<double>(spin_sign(s, i, n));
    beta.col(s) = u.alpha_T * sign;
  }
  CMat rho(configs, configs);
  for (int s = 0; s < configs; ++s)
    for (int t = 0; t < configs; ++t) {
      // prod_j <beta_t|beta_s>
      cplx log_overlap = 0.0;
      for (int j = 0; j < beta.rows(); ++j)
        log_overlap += -0.5 * std::norm(beta(j, s)) - 0.5 * std::norm(beta(j, t)) + std::conj(beta(j, t)) * beta(j, s);
      rho(s, t) = init_x(s) * std::conj(init_x(t)) * std::polar(1.0, theta(s) - theta(t)) * std::exp(log_overlap);
    }
  return hadamard_conj(rho, n);
}

double analytic_fidelity(const AnalyticUnitary& u, const Mat& target_phases, const CVec& initial) {
  const CVec ideal = ideal_state(target_phases, initial);
  return std::real(ideal.dot(analytic_density(u, initial) * ideal));
}

}  // namespace lsf
