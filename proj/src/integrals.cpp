#include "lsf/integrals.hpp"

#include <algorithm>
#include <cmath>

namespace lsf::integrals {

namespace {

constexpr cplx kI{0.0, 1.0};

// Below this node spread the divided difference is summed as a series.
constexpr double kSeriesSpread = 0.5;
constexpr int kSeriesTerms = 24;

cplx expi(double theta) { return {std::cos(theta), std::sin(theta)}; }

double sinc(double y) { return y == 0.0 ? 1.0 : std::sin(y) / y; }

// exp[i t0, i t0 + i u] = exp(i t0) * phi1(u)
cplx first_difference(double t0, double u) { return expi(t0) * phi1(u); }

}  // namespace

cplx phi1(double theta) { return expi(0.5 * theta) * sinc(0.5 * theta); }

cplx exp_divided_difference2(double t0, double d01, double d02, double d12) {
  const double s01 = std::abs(d01);
  const double s02 = std::abs(d02);
  const double s12 = std::abs(d12);
  const double spread = std::max({s01, s02, s12});

  if (spread < kSeriesSpread) {
    // exp[0, u, v] = sum_k h_k(u, v) / (k + 2)!, h_k the complete homogeneous
    // polynomial of degree k in (u, v).
    const cplx u = kI * d01;
    const cplx v = kI * d02;
    cplx h = 1.0;      // h_0
    cplx u_pow = 1.0;  // u^k
    double factorial = 2.0;
    cplx sum = h / factorial;
    for (int k = 1; k < kSeriesTerms; ++k) {
      u_pow *= u;
      h = u_pow + v * h;
      factorial *= static_cast<double>(k + 2);
      sum += h / factorial;
    }
    return expi(t0) * sum;
  }

  // f[a, b, c] = (f[b, c] - f[a, b]) / (c - a) with (a, c) the widest pair.
  const double t1 = t0 + d01;
  const double t2 = t0 + d02;
  if (s02 >= s01 && s02 >= s12) {
    // a = 0, b = 1, c = 2
    return (first_difference(t1, d12) - first_difference(t0, d01)) / (kI * d02);
  }
  if (s01 >= s12) {
    // a = 0, b = 2, c = 1
    return (first_difference(t2, -d12) - first_difference(t0, d02)) / (kI * d01);
  }
  // a = 1, b = 0, c = 2
  return (first_difference(t0, d02) - first_difference(t1, -d01)) / (kI * d12);
}

cplx exp_integral(double w, double tau) { return tau * phi1(w * tau); }

cplx drive_response(double x, double a, double tau) {
  return (exp_integral(x + a, tau) - exp_integral(x - a, tau)) / (2.0 * kI);
}

double sine_sine_overlap(double x, double a) { return drive_response(x, a, 1.0).imag(); }

double cosine_sine_overlap(double x, double a) { return drive_response(x, a, 1.0).real(); }

double ordered_triple_sine(double x, double a, double b) {
  // Expand the three sines in exponentials; conjugate sign patterns pair up,
  // leaving four simplex integrals exp[0, p, p + q] with p = x + s1 a and
  // q = -x + s2 b.
  cplx sum = 0.0;
  for (const int s1 : {1, -1}) {
    for (const int s2 : {1, -1}) {
      const double p = x + s1 * a;
      const double q = -x + s2 * b;
      const double pq = s1 * a + s2 * b;
      sum += static_cast<double>(s1 * s2) * exp_divided_difference2(0.0, p, pq, q);
    }
  }
  return (0.25 * kI * sum).real();
}

double mode_form_entry(double x, double a, double b) {
  return -(ordered_triple_sine(x, a, b) + ordered_triple_sine(x, b, a));
}

}  // namespace lsf::integrals
