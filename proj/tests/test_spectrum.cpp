#include <doctest.h>

#include <cmath>
#include <random>

#include "lsf/spectrum.hpp"
#include "oracles/quadrature.hpp"

using namespace lsf;

namespace {

IonCrystal chain(int n) {
  CrystalConfig cfg;
  cfg.n_ions = n;
  return build_crystal(cfg);
}

}  // namespace

TEST_CASE("harmonic grid over the 3 to 3.5 MHz band") {
  const IonCrystal c = chain(49);
  const ToneGrid g = build_tone_grid(c, 12.9e-3, 0.0);
  REQUIRE(g.is_harmonic());
  CHECK(g.harmonics.front() == 38700);
  CHECK(g.harmonics.back() == 45150);
  CHECK(g.size() == 6451);
  for (int m = 1; m < g.size(); ++m) CHECK(g.harmonics[m] == g.harmonics[m - 1] + 1);

  const ToneGrid g2 = build_tone_grid(c, 2 * 12.9e-3, 0.0);
  CHECK(std::abs(g2.size() - 2 * g.size()) <= 2);

  const ToneGrid again = build_tone_grid(c, 12.9e-3, 0.0);
  CHECK(again.harmonics == g.harmonics);
}

TEST_CASE("narrow band picks the neighbouring harmonics") {
  IonCrystal c;
  c.mode_freqs = Vec::Constant(1, kTwoPi * 100.0);
  const double t = 1.0;
  const ToneGrid g = build_tone_grid(c, t, 2.0 * kTwoPi / t);
  REQUIRE(g.size() == 5);
  CHECK(g.harmonics.front() == 98);
  CHECK(g.harmonics.back() == 102);
}

TEST_CASE("grid too short for any tone names the minimal gate time") {
  IonCrystal c;
  c.mode_freqs = Vec::Constant(1, kTwoPi * 100.4);
  try {
    build_tone_grid(c, 0.001, 0.0);
    FAIL("expected an error");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("T must be at least") != std::string::npos);
  }
}

TEST_CASE("restriction to tones near modes") {
  const IonCrystal c = chain(49);
  const double t = 12.9e-3;
  const ToneGrid g = build_tone_grid(c, t, 0.0);
  const ToneGrid wide = restrict_tones_near_modes(g, c, 1e12);
  CHECK(wide.harmonics == g.harmonics);

  const ToneGrid r = restrict_tones_near_modes(g, c, 3.0 * kTwoPi / t);
  // Oracle: count harmonics within 3 of T nu_j / 2 pi for each mode, merging overlaps.
  std::vector<long> expect;
  for (long h = g.harmonics.front(); h <= g.harmonics.back(); ++h) {
    for (int j = 0; j < c.size(); ++j) {
      if (std::abs(static_cast<double>(h) - c.mode_freqs(j) * t / kTwoPi) <= 3.0) {
        expect.push_back(h);
        break;
      }
    }
  }
  CHECK(r.harmonics == expect);
  CHECK(r.size() <= 7 * 49);

  // Off-grid mode with a window below the harmonic spacing keeps at most one tone.
  IonCrystal single;
  single.mode_freqs = Vec::Constant(1, kTwoPi * 100.5);
  const ToneGrid base = build_tone_grid(single, 1.0, 3 * kTwoPi);
  CHECK_THROWS_AS(restrict_tones_near_modes(base, single, 0.4 * kTwoPi), InfeasibleError);
  CHECK(restrict_tones_near_modes(base, single, 0.6 * kTwoPi).size() == 2);
}

TEST_CASE("closure rows against quadrature") {
  // Unit gate time and modes a few tens of harmonics up keep the oracle cheap.
  IonCrystal c;
  c.mode_freqs.resize(3);
  c.mode_freqs << kTwoPi * 20.37, kTwoPi * 23.81, kTwoPi * 26.0;
  const double t = 1.0;
  const ToneGrid g = build_tone_grid(c, t, default_margin(t));
  const Mat l = build_l_matrix(c, g);
  const Mat full = build_closure_matrix(c, g);
  REQUIRE(l.rows() == 3);
  REQUIRE(full.rows() == 6);
  CHECK(full.topRows(3) == l);
  for (int j = 0; j < 3; ++j) {
    for (int m = 0; m < g.size(); ++m) {
      const double x = c.mode_freqs(j), a = g.tone_freqs(m);
      CHECK(std::abs(l(j, m) - oracle::sine_sine(x, a)) < 1e-10 * std::max(1e-3, std::abs(l(j, m))));
      CHECK(std::abs(full(3 + j, m) - oracle::cosine_sine(x, a)) < 1e-10 * std::max(1e-3, std::abs(full(3 + j, m))));
    }
  }
  // Mode 2 is itself a harmonic: its resonant entry is exactly T/2.
  for (int m = 0; m < g.size(); ++m) {
    if (g.harmonics[m] == 26) CHECK(std::abs(l(2, m) - 0.5) < 1e-12);
    else CHECK(std::abs(l(2, m)) < 1e-12);
  }
}

TEST_CASE("kernel basis") {
  SUBCASE("zero matrix keeps every direction") {
    const KernelBasis kb = kernel_basis(Mat::Zero(2, 5));
    CHECK(kb.dim() == 5);
    CHECK(kb.basis == Mat::Identity(5, 5));
  }
  SUBCASE("rank-nullity on a random full-rank matrix") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Mat l(4, 11);
    for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = g(rng);
    const KernelBasis kb = kernel_basis(l);
    CHECK(kb.dim() == 7);
    CHECK((kb.basis.transpose() * kb.basis - Mat::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((l * kb.basis).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("trivial kernel is reported") {
    CHECK_THROWS_AS(kernel_basis(Mat::Identity(3, 3)), InfeasibleError);
  }
  SUBCASE("ten ion chain at twice the minimal gate time") {
    const IonCrystal c = chain(10);
    const double t = 2.0 * min_gate_time(c);
    const ToneGrid g = restrict_tones_near_modes(build_tone_grid(c, t, default_margin(t)), c, default_window(t));
    const Mat l = build_closure_matrix(c, g);
    const KernelBasis kb = kernel_basis(l);
    // Harmonic tones make the sine and cosine rows collinear mode by mode.
    CHECK(kb.dim() == g.size() - 10);
    CHECK((l * kb.basis).cwiseAbs().maxCoeff() <= 1e-10 * l.cwiseAbs().maxCoeff());
    CHECK((kb.basis.transpose() * kb.basis - Mat::Identity(kb.dim(), kb.dim())).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("49-ion restricted grid") {
    const IonCrystal c = chain(49);
    const double t = 12.9e-3;
    const ToneGrid g = restrict_tones_near_modes(build_tone_grid(c, t, 0.0), c, 3.0 * kTwoPi / t);
    const Mat l = build_closure_matrix(c, g);
    const KernelBasis kb = kernel_basis(l);
    CHECK((l * kb.basis).cwiseAbs().maxCoeff() <= 1e-10);
  }
}
