#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "lsf/coupling.hpp"
#include "oracles/quadrature.hpp"
#include "oracles/time_domain.hpp"

using namespace lsf;

namespace {

Vec random_vec(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

}  // namespace

TEST_CASE("raw mode form matches quadrature on a slow chain") {
  const IonCrystal c = fixture::slow_chain(2);
  const ToneGrid g = build_tone_grid(c, 1.0, kTwoPi);
  const Mat a = mode_form(c.mode_freqs(0), g);
  CHECK(a == a.transpose());
  for (int p = 0; p < g.size(); p += 2)
    for (int q = p; q < g.size(); q += 3) {
      const double want = oracle::mode_form_entry(c.mode_freqs(0), g.tone_freqs(p), g.tone_freqs(q));
      CHECK(std::abs(a(p, q) - want) < 1e-9 * std::max(std::abs(want), 1e-6));
    }
}

TEST_CASE("pair couplings") {
  const IonCrystal c = fixture::chain(4);
  const CouplingSet set = fixture::couplings(c, 2.0);
  const int k = set.dim();
  REQUIRE(k > 0);
  for (const Mat& f : set.mode_forms) CHECK((f - f.transpose()).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("symmetric and additive over modes") {
    const Mat a = pair_coupling(set, 0, 2);
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-18);
    Mat sum = Mat::Zero(k, k);
    for (int j = 0; j < set.modes(); ++j) {
      const double eta = c.lamb_dicke(j);
      sum += -eta * eta * c.participation(0, j) * c.participation(2, j) * set.mode_forms[j];
    }
    CHECK((a - sum).cwiseAbs().maxCoeff() <= 1e-14 * a.cwiseAbs().maxCoeff());
    CHECK((pair_coupling(set, 2, 0) - a).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("constraint form reproduces the bilinear phase") {
    const Vec r = random_vec(4 * k, 5);
    const Mat f = assemble_constraint_form(set, 1, 3);
    const Mat rm = coords_matrix(r, 4);
    const double direct = rm.col(1).dot(pair_coupling(set, 1, 3) * rm.col(3));
    CHECK(std::abs(r.dot(f * r) - direct) <= 1e-13 * std::abs(direct));
    CHECK((f - f.transpose()).cwiseAbs().maxCoeff() == 0.0);

    Vec r0 = r;
    r0.segment(3 * k, k).setZero();
    CHECK(std::abs(r0.dot(f * r0)) < 1e-30);

    const Mat phases = pair_phases(set, r);
    CHECK(std::abs(phases(1, 3) - direct) <= 1e-12 * std::abs(direct));
    CHECK(phases(3, 1) == phases(1, 3));
    CHECK(phases.diagonal().cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(assemble_constraint_form(set, 2, 2), ConfigError);
  }

  SUBCASE("pair jacobian matches finite differences") {
    const PairConstraints pc(set, 1.0 / std::pow(c.mean_lamb_dicke(), 2));
    const Vec r = random_vec(pc.dim(), 9);
    const Mat jac = pc.jacobian(r);
    const double h = 1e-6;
    for (int i = 0; i < pc.dim(); i += 7) {
      Vec rp = r, rm = r;
      rp(i) += h;
      rm(i) -= h;
      const Vec fd = (pc.values(rp) - pc.values(rm)) / (2 * h);
      CHECK((fd - jac.col(i)).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + jac.cwiseAbs().maxCoeff()));
    }
    CHECK(pc.index(1, 3) == 4);
    CHECK(pc.pair(4) == std::make_pair(1, 3));
  }

  SUBCASE("global ansatz phases vanish with the per-mode phases") {
    // r_n = z for all n gives phi_nm = sum_j w_j(n, m) z^T A_j z.
    const Vec z = random_vec(k, 12);
    const ModeConstraints mc(set);
    const Vec per_mode = mc.values(z);
    Vec stacked(4 * k);
    for (int n = 0; n < 4; ++n) stacked.segment(n * k, k) = z;
    const Mat phases = pair_phases(set, stacked);
    for (int n = 0; n < 4; ++n)
      for (int m = n + 1; m < 4; ++m) {
        double want = 0.0;
        for (int j = 0; j < 4; ++j) want += set.pair_weight(j, n, m) * per_mode(j);
        CHECK(std::abs(phases(n, m) - want) <= 1e-12 * std::abs(want));
      }
  }
}

TEST_CASE("two ion pair coupling splits into the symmetric modes") {
  const IonCrystal c = fixture::chain(2);
  const CouplingSet set = fixture::couplings(c, 3.0);
  const Mat a = pair_coupling(set, 0, 1);
  const double e0 = c.lamb_dicke(0), e1 = c.lamb_dicke(1);
  // Mode 0 is antisymmetric, mode 1 the centre of mass.
  const Mat want = -(e1 * e1 * 0.5 * set.mode_forms[1] - e0 * e0 * 0.5 * set.mode_forms[0]);
  CHECK((a - want).cwiseAbs().maxCoeff() <= 1e-13 * a.cwiseAbs().maxCoeff());
}

TEST_CASE("displacement trajectories") {
  const IonCrystal c = fixture::slow_chain(3);
  const double t = 1.0;
  const ToneGrid g = build_tone_grid(c, t, 2 * kTwoPi);
  const Mat amps = coords_matrix(random_vec(3 * g.size(), 4), 3).transpose().eval();
  REQUIRE(amps.rows() == 3);

  CHECK(displacement_trajectory(c, g, amps, 0.0).cwiseAbs().maxCoeff() == 0.0);

  for (double tau : {0.23, 0.5, 0.91}) {
    const CMat alpha = displacement_trajectory(c, g, amps, tau);
    for (int j = 0; j < 3; ++j)
      for (int n = 0; n < 3; ++n) {
        cplx want = 0.0;
        for (int m = 0; m < g.size(); ++m)
          want += amps(n, m) * oracle::drive_response(c.mode_freqs(j), g.tone_freqs(m), tau);
        want *= cplx(0.0, -c.lamb_dicke(j) * c.participation(n, j));
        CHECK(std::abs(alpha(j, n) - want) <= 1e-8 * std::abs(want));
      }
  }
}

TEST_CASE("kernel drives close every displacement loop") {
  const IonCrystal c = fixture::chain(10);
  const CouplingSet set = fixture::couplings(c, 2.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Vec coords = random_vec(10 * set.dim(), seed);
    const Mat amps = expand_amplitudes(*set.kernel, coords, 10);
    double peak = 0.0;
    for (int s = 1; s < 64; ++s)
      peak = std::max(peak, displacement_trajectory(c, *set.grid, amps, s / 64.0).cwiseAbs().maxCoeff());
    const double end = displacement_trajectory(c, *set.grid, amps, 1.0).cwiseAbs().maxCoeff();
    CHECK(end <= 1e-8 * peak);
  }
}

TEST_CASE("time-domain oracle agrees with adaptive quadrature") {
  // Two ions, three tones, two modes; checked entry by entry.
  Vec a(3), x(2);
  a << 31.0, 37.5, 44.2;
  x << 33.3, 40.1;
  Mat u(2, 3);
  u << 0.7, -1.1, 0.4, 0.2, 0.9, -0.5;
  const oracle::MultiToneDrive drive(a, u, x);
  const auto q = drive.mode_forms();
  const auto track = drive.displacement_at_chunk_edges();
  for (int j = 0; j < 2; ++j) {
    Mat form(3, 3);
    for (int p = 0; p < 3; ++p)
      for (int k = 0; k < 3; ++k) form(p, k) = oracle::mode_form_entry(x(j), a(p), a(k));
    const Mat want = u * form * u.transpose();
    CHECK((q[static_cast<std::size_t>(j)] - want).cwiseAbs().maxCoeff() <= 1e-11 * want.cwiseAbs().maxCoeff());
    for (int n = 0; n < 2; ++n) {
      cplx end = 0.0;
      for (int p = 0; p < 3; ++p) end += u(n, p) * oracle::drive_response(x(j), a(p), 1.0);
      CHECK(std::abs(track.back()(j, n) - end) <= 1e-12 * std::abs(end));
    }
  }
}
