#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "lsf/analysis.hpp"

using namespace lsf;

TEST_CASE("infidelity metric") {
  const Mat a = target_cluster_grid(4, 2, 2).phases;
  CHECK(infidelity(a, a) == 0.0);
  Mat b = a;
  b(0, 1) += 1e-2;
  b(1, 0) += 1e-2;
  CHECK(infidelity(b, a) == doctest::Approx(2e-4));
  CHECK(infidelity(b, a, false) == doctest::Approx(1e-4));
}

TEST_CASE("nuclear norm estimate") {
  const IonCrystal c = fixture::chain(6);
  const TargetMatrix zero = target_pairwise(6, {});
  CHECK(nuclear_norm_estimate(zero, c, 1e-3) == 0.0);

  const TargetMatrix t = target_all_to_all(6, {0, 1, 2, 3, 4, 5});
  const double e1 = nuclear_norm_estimate(t, c, 1e-3);
  CHECK(nuclear_norm_estimate(t, c, 2e-3) == doctest::Approx(e1 / 2));
  const double want = 4.0 * std::sqrt(6.0 * 10 * kDefaultPhase) / (std::sqrt(kTwoPi) * c.lamb_dicke.mean() * 1e-3);
  CHECK(e1 == doctest::Approx(want));

  // Ion relabeling leaves the estimate unchanged.
  const TargetMatrix r = target_random(6, 0.6, 0.7, 3);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
  perm.indices() << 3, 5, 0, 1, 4, 2;
  const TargetMatrix rp = target_from_matrix(perm * r.phases * perm.transpose(), "perm");
  CHECK(nuclear_norm_estimate(rp, c, 1e-3) == doctest::Approx(nuclear_norm_estimate(r, c, 1e-3)).epsilon(1e-12));

  EstimatorConfig bad;
  bad.exponent = 1.5;
  CHECK_THROWS_AS(nuclear_norm_estimate(t, c, 1e-3, bad), ConfigError);
}

TEST_CASE("MS reference Rabi frequency") {
  const double w = ms_reference_rabi(kPi / 4, 0.1, 1e-3);
  CHECK(w == doctest::Approx(std::sqrt(kPi / 4) / (std::sqrt(kTwoPi) * 0.1 * 1e-3)));
  CHECK(ms_reference_rabi(kPi, 0.1, 1e-3) == doctest::Approx(2 * w));
}

TEST_CASE("overlap") {
  Vec a(3), b(3);
  a << 1, 2, 3;
  b << -3, 0, 1;
  CHECK(overlap(a, a) == doctest::Approx(1.0));
  CHECK(overlap(a, -a) == doctest::Approx(1.0));
  CHECK(overlap(a, b) == 0.0);
}

TEST_CASE("motion variances") {
  const IonCrystal c = fixture::chain(5);
  const CouplingSet set = fixture::couplings(c, 2.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Vec z(set.dim());
  for (int i = 0; i < z.size(); ++i) z(i) = g(rng);
  // Mirror-symmetric drive on a mirror-symmetric crystal.
  Vec coords(5 * set.dim());
  for (int n = 0; n < 5; ++n) coords.segment(n * set.dim(), set.dim()) = (1.0 + 0.3 * std::min(n, 4 - n)) * z;
  const Mat amps = expand_amplitudes(*set.kernel, coords, 5);

  CHECK(mode_variance(c, *set.grid, amps, 0.0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ion_variances(c, *set.grid, Mat::Zero(5, set.raw_dim()), 0.4).cwiseAbs().maxCoeff() == 0.0);
  for (double tau : {0.2, 0.5, 0.77}) {
    const Vec v = ion_variances(c, *set.grid, amps, tau);
    for (int n = 0; n < 2; ++n) CHECK(std::abs(v(n) - v(4 - n)) <= 1e-6 * v(n));
    CHECK(ion_variance(c, *set.grid, amps, 1, tau) == v(1));
  }
  const Vec end = mode_variance(c, *set.grid, amps, 1.0);
  const Vec mid = mode_variance(c, *set.grid, amps, 0.5);
  CHECK(end.maxCoeff() <= 1e-14 * mid.maxCoeff());
}

TEST_CASE("line fit") {
  const LineFit f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}
