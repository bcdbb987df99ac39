#pragma once

// Brute-force numerical references for the closed-form integrals. These only
// call adaptive Gauss-Kronrod quadrature on the raw integrands and share no
// code with the library.

#include <cmath>
#include <complex>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

template <class F>
double integrate(F f, double lo, double hi, double tol = 1e-14) {
  if (hi <= lo) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 10, tol, &err);
}

/// int_0^tau sin(x t) sin(a t) dt
inline double sine_sine(double x, double a, double tau = 1.0) {
  return integrate([&](double t) { return std::sin(x * t) * std::sin(a * t); }, 0.0, tau);
}

/// int_0^tau cos(x t) sin(a t) dt
inline double cosine_sine(double x, double a, double tau = 1.0) {
  return integrate([&](double t) { return std::cos(x * t) * std::sin(a * t); }, 0.0, tau);
}

/// int_0^tau exp(i x t) sin(a t) dt
inline std::complex<double> drive_response(double x, double a, double tau) {
  return {cosine_sine(x, a, tau), sine_sine(x, a, tau)};
}

/// -int_0^1 dt1 int_0^t1 dt2 sin(x(t1-t2)) [sin(a t1) sin(b t2) + sin(a t2) sin(b t1)]
inline double mode_form_entry(double x, double a, double b) {
  auto outer = [&](double t1) {
    auto inner = [&](double t2) {
      return std::sin(x * (t1 - t2)) *
             (std::sin(a * t1) * std::sin(b * t2) + std::sin(a * t2) * std::sin(b * t1));
    };
    return integrate(inner, 0.0, t1, 1e-13);
  };
  return -integrate(outer, 0.0, 1.0, 1e-13);
}

}  // namespace oracle
