#pragma once

#include "lsf/types.hpp"

// Closed-form time integrals behind the displacement-closure rows, the
// per-mode quadratic forms and the displacement trajectories.
//
// Everything here is dimensionless: time is measured in units of the gate
// time T, so a mode at angular frequency nu enters as x = nu * T and a tone
// at omega as a = omega * T. The integration window is [0, tau] (tau = 1 is
// the full gate). Results are exact for arbitrary (not only harmonic) tones.
namespace lsf::integrals {

/// (exp(i theta) - 1) / (i theta), equal to 1 at theta = 0.
cplx phi1(double theta);

/// Second divided difference of exp at the imaginary nodes i*t0, i*t1, i*t2.
///
/// The node differences are passed separately (d01 = t1 - t0, d02 = t2 - t0,
/// d12 = t2 - t1) so callers can form them from frequency differences without
/// cancellation. Near-coincident nodes switch to a Taylor series.
cplx exp_divided_difference2(double t0, double d01, double d02, double d12);

/// int_0^tau exp(i w t) dt
cplx exp_integral(double w, double tau);

/// int_0^tau exp(i x t) sin(a t) dt. Proportional to the mode displacement
/// produced by a unit sine tone.
cplx drive_response(double x, double a, double tau);

/// int_0^1 sin(x t) sin(a t) dt
double sine_sine_overlap(double x, double a);

/// int_0^1 cos(x t) sin(a t) dt
double cosine_sine_overlap(double x, double a);

/// int_0^1 dt1 int_0^t1 dt2 sin(x (t1 - t2)) sin(a t1) sin(b t2)
double ordered_triple_sine(double x, double a, double b);

/// Entry (m, l) of the sine-sine mode form for a mode at x and tones a, b:
/// -int_0^1 dt1 int_0^t1 dt2 sin(x (t1 - t2)) [sin(a t1) sin(b t2) + sin(a t2) sin(b t1)].
/// Symmetric in (a, b) by construction.
double mode_form_entry(double x, double a, double b);

}  // namespace lsf::integrals
