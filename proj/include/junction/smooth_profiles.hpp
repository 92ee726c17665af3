#pragma once

// C-infinity transition profiles used everywhere a smooth cut-off or a
// compactly supported coefficient is required:
//
//   step(t)  = B(t) / (B(t) + B(1-t)),  B(t) = exp(-1/t) for t > 0, else 0,
//
// which is identically 0 for t <= 0 and 1 for t >= 1, together with its first
// two derivatives in closed form (the residual formulas need them), and the
// normalized bump exp(1 - 1/(4 t (1-t))) on (0, 1).

#include <cmath>

#include "junction/numerics.hpp"

namespace junction {

namespace detail {

inline double expinv(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
inline double expinv_d1(double t) {
    if (t <= 0.0) return 0.0;
    double f = expinv(t);
    return f / (t * t);
}
inline double expinv_d2(double t) {
    if (t <= 0.0) return 0.0;
    double f = expinv(t);
    return f * (1.0 / (t * t * t * t) - 2.0 / (t * t * t));
}

}  // namespace detail

inline double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double f = detail::expinv(t);
    double g = detail::expinv(1.0 - t);
    return f / (f + g);
}

inline double smooth_step_d1(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    double f = detail::expinv(t), g = detail::expinv(1.0 - t);
    double fp = detail::expinv_d1(t), gp = -detail::expinv_d1(1.0 - t);
    double s = f + g;
    return (fp * g - f * gp) / (s * s);
}

inline double smooth_step_d2(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    double f = detail::expinv(t), g = detail::expinv(1.0 - t);
    double fp = detail::expinv_d1(t), gp = -detail::expinv_d1(1.0 - t);
    double fpp = detail::expinv_d2(t), gpp = detail::expinv_d2(1.0 - t);
    double s = f + g;
    double num = fp * g - f * gp;
    double num_d = fpp * g - f * gpp;
    return (num_d * s - 2.0 * num * (fp + gp)) / (s * s * s);
}

// Smooth 0 -> 1 transition over [lo, hi]; derivatives scale by the width.
struct SmoothTransition {
    double lo = 0.0;
    double hi = 1.0;
    double value(double x) const { return smooth_step((x - lo) / (hi - lo)); }
    double d1(double x) const { return smooth_step_d1((x - lo) / (hi - lo)) / (hi - lo); }
    double d2(double x) const { return smooth_step_d2((x - lo) / (hi - lo)) / ((hi - lo) * (hi - lo)); }
};

// Compactly supported bump on (a, b), max `amplitude` at the midpoint.
inline double smooth_bump(double x, double a, double b, double amplitude) {
    if (x <= a || x >= b) return 0.0;
    double t = (x - a) / (b - a);
    return amplitude * std::exp(1.0 - 1.0 / (4.0 * t * (1.0 - t)));
}

// Antiderivative of smooth_step: T(u) = int_0^u step. T(1) = 1/2 by the
// symmetry step(t) + step(1-t) = 1; beyond 1 it continues linearly. Evaluated
// by quadrature at setup time only, so the cost does not matter.
inline double smooth_step_antiderivative(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 0.5 + (u - 1.0);
    return integrate_gauss([](double t) { return smooth_step(t); }, 0.0, u, 24, 12);
}

}  // namespace junction
