#include <doctest.h>

#include <cmath>
#include <vector>

#include "lsf/crystal.hpp"

using namespace lsf;

namespace {

CrystalConfig chain(int n) {
  CrystalConfig cfg;
  cfg.n_ions = n;
  return cfg;
}

// det(H - lambda I) by cofactor expansion; only used for N = 4.
double det(const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  double sum = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<double>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<double> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(a[r][k]);
      minor.push_back(row);
    }
    sum += ((c % 2 == 0) ? 1.0 : -1.0) * a[0][c] * det(minor);
  }
  return sum;
}

double char_poly(const std::vector<std::vector<double>>& h, double lambda) {
  auto a = h;
  for (std::size_t i = 0; i < a.size(); ++i) a[i][i] -= lambda;
  return det(a);
}

}  // namespace

TEST_CASE("two ions split into symmetric and antisymmetric modes") {
  const IonCrystal c = build_crystal(chain(2));
  const double s = 1.0 / std::sqrt(2.0);
  // The centre-of-mass mode sits at the top of the transverse band.
  CHECK(std::abs(std::abs(c.participation(0, 1)) - s) < 1e-14);
  CHECK(std::abs(c.participation(0, 1) - c.participation(1, 1)) < 1e-14);
  CHECK(std::abs(c.participation(0, 0) + c.participation(1, 0)) < 1e-14);
  CHECK(c.com_mode() == 1);
  CHECK(c.mode_freqs(0) == kTwoPi * 3.0e6);
  CHECK(c.mode_freqs(1) == kTwoPi * 3.5e6);
}

TEST_CASE("four ion eigenproblem agrees with a characteristic polynomial solve") {
  const CrystalConfig cfg = chain(4);
  const IonCrystal c = build_crystal(cfg);
  const Mat& o = c.participation;
  CHECK((o * o.transpose() - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

  // Independent Hessian and root bracketing of det(H - lambda I).
  const double k = coulomb_coupling(cfg);
  std::vector<std::vector<double>> h(4, std::vector<double>(4, 0.0));
  for (int i = 0; i < 4; ++i) {
    h[i][i] = 1.0;
    for (int p = 0; p < 4; ++p) {
      if (p == i) continue;
      const double v = k / std::pow(std::abs(i - p), 3);
      h[i][p] = v;
      h[i][i] -= v;
    }
  }
  std::vector<double> roots;
  const int steps = 20000;
  double prev = char_poly(h, 0.0);
  for (int s = 1; s <= steps; ++s) {
    const double lo = 1.2 * (s - 1) / steps, hi = 1.2 * s / steps;
    const double cur = char_poly(h, hi);
    if ((prev < 0) != (cur < 0)) {
      double a = lo, b = hi, fa = prev;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = char_poly(h, mid);
        if ((fm < 0) == (fa < 0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev = cur;
  }
  REQUIRE(roots.size() == 4);
  // Undo the affine band map and compare the relative spacing.
  Vec raw(4);
  for (int j = 0; j < 4; ++j) raw(j) = std::sqrt(roots[static_cast<std::size_t>(j)]);
  const double lo = kTwoPi * cfg.mode_freq_low, hi = kTwoPi * cfg.mode_freq_high;
  for (int j = 0; j < 4; ++j) {
    const double want = lo + (raw(j) - raw(0)) / (raw(3) - raw(0)) * (hi - lo);
    CHECK(std::abs(c.mode_freqs(j) - want) < 1e-9 * want);
  }
  // Each column is an eigenvector of the oracle Hessian with the matching root.
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) {
      double hv = 0.0;
      for (int p = 0; p < 4; ++p) hv += h[i][p] * o(p, j);
      CHECK(std::abs(hv - roots[static_cast<std::size_t>(j)] * o(i, j)) < 1e-10);
    }
  }
}

TEST_CASE("49-ion chain spans the configured band") {
  const IonCrystal c = build_crystal(chain(49));
  CHECK(c.mode_freqs(0) == doctest::Approx(kTwoPi * 3.0e6).epsilon(1e-12));
  CHECK(c.mode_freqs(48) == doctest::Approx(kTwoPi * 3.5e6).epsilon(1e-12));
  for (int j = 1; j < 49; ++j) CHECK(c.mode_freqs(j) > c.mode_freqs(j - 1));
  CHECK(c.lamb_dicke.minCoeff() > 0.0);
  CHECK((c.participation * c.participation.transpose() - Mat::Identity(49, 49)).cwiseAbs().maxCoeff() < 1e-12);
  // With the physically derived Coulomb ratio the smallest gap lands near the
  // low edge and gives T_min of roughly 0.7 ms.
  const double tmin = min_gate_time(c);
  MESSAGE("N=49 T_min = " << tmin * 1e3 << " ms");
  CHECK(tmin > 0.5e-3);
  CHECK(tmin < 1.0e-3);
}

TEST_CASE("orthogonality holds up to 64 ions") {
  for (int n : {8, 16, 32, 64}) {
    const IonCrystal c = build_crystal(chain(n));
    CHECK((c.participation * c.participation.transpose() - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("minimal gate time grows roughly quadratically with ion number") {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int n : {8, 16, 32, 64}) {
    const double x = std::log(n), y = std::log(min_gate_time(build_crystal(chain(n))));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
  MESSAGE("T_min exponent: " << slope);
  CHECK(slope >= 1.7);
  CHECK(slope <= 2.3);
}

TEST_CASE("crystal construction is deterministic") {
  const IonCrystal a = build_crystal(chain(17));
  const IonCrystal b = build_crystal(chain(17));
  CHECK(a.mode_freqs == b.mode_freqs);
  CHECK(a.participation == b.participation);
  CHECK(a.lamb_dicke == b.lamb_dicke);
}

TEST_CASE("mode gaps") {
  Vec two(2);
  two << kTwoPi * 3.0e6, kTwoPi * 3.1e6;
  CHECK(min_mode_gap(two) == doctest::Approx(kTwoPi * 0.1e6));

  Vec even(5);
  for (int j = 0; j < 5; ++j) even(j) = kTwoPi * (1e6 + 250.0 * j);
  CHECK(min_mode_gap(even) == doctest::Approx(kTwoPi * 250.0));

  const int used[] = {0, 3};
  CHECK(min_mode_gap(even, used) == doctest::Approx(kTwoPi * 750.0));
  const int single[] = {2};
  CHECK_THROWS_AS(min_mode_gap(even, single), ConfigError);

  Vec hz(2);
  hz << kTwoPi * 1000.0, kTwoPi * 1100.0;
  IonCrystal c;
  c.mode_freqs = hz;
  CHECK(min_gate_time(c) == doctest::Approx(0.01));
  c.mode_freqs(1) = kTwoPi * 1200.0;
  CHECK(min_gate_time(c) == doctest::Approx(0.005));
}

TEST_CASE("invalid and unstable crystals are rejected") {
  CrystalConfig bad = chain(1);
  CHECK_THROWS_AS(build_crystal(bad), ConfigError);
  bad = chain(4);
  bad.mode_freq_low = 4e6;
  CHECK_THROWS_AS(build_crystal(bad), ConfigError);
  CrystalConfig unstable = chain(20);
  unstable.coulomb_coupling = 0.5;
  CHECK_THROWS_AS(build_crystal(unstable), NumericalError);
}
