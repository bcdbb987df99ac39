#pragma once

// Time-domain references for the motional integrals of a multi-tone drive
//   f_n(s) = sum_m U(n, m) sin(a_m s),  s in [0, 1] (gate-time units).
// Composite Gauss-Legendre on chunks a quarter of the fastest period wide;
// nothing here calls the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

namespace oracle {

class MultiToneDrive {
 public:
  /// a: tone frequencies times T; u: ions x tones; x: mode frequencies times T.
  MultiToneDrive(Eigen::VectorXd a, Eigen::MatrixXd u, Eigen::VectorXd x)
      : a_(std::move(a)), u_(std::move(u)), x_(std::move(x)) {
    const double fastest = std::max(a_.cwiseAbs().maxCoeff(), x_.cwiseAbs().maxCoeff());
    chunks_ = std::max(16, static_cast<int>(std::ceil(fastest / (2.0 * M_PI) * 4.0)));
  }

  int chunks() const { return chunks_; }

  /// alpha(j, n) = int_0^{k / chunks} e^{i x_j s} f_n(s) ds for k = 0..chunks.
  std::vector<Eigen::MatrixXcd> displacement_at_chunk_edges() const {
    const int modes = static_cast<int>(x_.size());
    const int ions = static_cast<int>(u_.rows());
    std::vector<Eigen::MatrixXcd> out;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(modes, ions);
    out.push_back(acc);
    const double h = 1.0 / chunks_;
    for (int k = 0; k < chunks_; ++k) {
      add_segment(k * h, (k + 1) * h, acc);
      out.push_back(acc);
    }
    return out;
  }

  /// Q[j](n, m) = -int_0^1 dt1 int_0^t1 dt2 sin(x_j (t1 - t2)) [f_n(t1) f_m(t2) + f_m(t1) f_n(t2)].
  std::vector<Eigen::MatrixXd> mode_forms() const {
    const int modes = static_cast<int>(x_.size());
    const int ions = static_cast<int>(u_.rows());
    std::vector<Eigen::MatrixXd> q(static_cast<std::size_t>(modes), Eigen::MatrixXd::Zero(ions, ions));
    // prefix(j, n) = int_0^{chunk start} e^{i x_j s} f_n(s) ds
    Eigen::MatrixXcd prefix = Eigen::MatrixXcd::Zero(modes, ions);
    const double h = 1.0 / chunks_;
    const auto& nodes = Gauss::abscissa();
    const auto& weights = Gauss::weights();
    for (int k = 0; k < chunks_; ++k) {
      const double lo = k * h, hi = lo + h, mid = 0.5 * (lo + hi), half = 0.5 * h;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (int sign : {-1, 1}) {
          if (sign < 0 && nodes[i] == 0.0) continue;
          const double t1 = mid + sign * half * nodes[i];
          Eigen::MatrixXcd inner = prefix;
          add_segment(lo, t1, inner);
          const Eigen::VectorXd f1 = drive(t1);
          for (int j = 0; j < modes; ++j) {
            // sin(x (t1 - t2)) = Im(e^{i x t1} e^{-i x t2}); inner holds e^{+i x t2}.
            const std::complex<double> e1 = std::polar(1.0, x_(j) * t1);
            const Eigen::VectorXd g = (e1 * inner.row(j).conjugate()).imag().transpose();
            q[static_cast<std::size_t>(j)] -= weights[i] * half * (f1 * g.transpose() + g * f1.transpose());
          }
        }
      }
      add_segment(lo, hi, prefix);
    }
    return q;
  }

 private:
  using Gauss = boost::math::quadrature::gauss<double, 20>;

  Eigen::VectorXd drive(double s) const {
    Eigen::VectorXd sn(a_.size());
    for (int m = 0; m < a_.size(); ++m) sn(m) = std::sin(a_(m) * s);
    return u_ * sn;
  }

  void add_segment(double lo, double hi, Eigen::MatrixXcd& acc) const {
    if (hi <= lo) return;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    const auto& nodes = Gauss::abscissa();
    const auto& weights = Gauss::weights();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (int sign : {-1, 1}) {
        if (sign < 0 && nodes[i] == 0.0) continue;
        const double s = mid + sign * half * nodes[i];
        const Eigen::VectorXd f = drive(s);
        for (int j = 0; j < x_.size(); ++j)
          acc.row(j) += (weights[i] * half * std::polar(1.0, x_(j) * s)) * f.transpose().cast<std::complex<double>>();
      }
    }
  }

  Eigen::VectorXd a_;
  Eigen::MatrixXd u_;
  Eigen::VectorXd x_;
  int chunks_ = 16;
};

}  // namespace oracle
