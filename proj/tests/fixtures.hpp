#pragma once

#include "lsf/coupling.hpp"
#include "lsf/crystal.hpp"

namespace fixture {

/// Default 40Ca chain in the 3 - 3.5 MHz band.
inline lsf::IonCrystal chain(int n) {
  lsf::CrystalConfig cfg;
  cfg.n_ions = n;
  return lsf::build_crystal(cfg);
}

/// Chain with a low band (Hz) so that a 1 s gate spans only tens of mode
/// periods; lets the quadrature oracles resolve the integrands directly.
inline lsf::IonCrystal slow_chain(int n, double lo_hz = 20.2, double hi_hz = 27.9, double eta = 0.1) {
  lsf::CrystalConfig cfg;
  cfg.n_ions = n;
  cfg.mode_freq_low = lo_hz;
  cfg.mode_freq_high = hi_hz;
  cfg.coulomb_coupling = 0.05;
  lsf::IonCrystal c = lsf::build_crystal(cfg);
  c.lamb_dicke.setConstant(eta);
  return c;
}

/// Couplings at gate_time = factor * T_min with default margin and window.
inline lsf::CouplingSet couplings(const lsf::IonCrystal& c, double factor) {
  const double t = factor * lsf::min_gate_time(c);
  return lsf::setup_couplings(c, t, lsf::default_margin(t), lsf::default_window(t));
}

}  // namespace fixture
