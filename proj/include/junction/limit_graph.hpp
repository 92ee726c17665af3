#pragma once

// Limit problem on the metric graph of the junction: first-order transport
// equations on the three edges,
//
//     -h_j^2 (v_j(x) w0_j(x))' = 2 h_j phi_j(x)   on (0, ell_j),
//
// with Dirichlet data w0_j(ell_j) = q_j on edges 1 and 2 and the Kirchhoff
// flux balance sum_j v_j h_j^2 w0_j(0) = 0 at the vertex. The solution is the
// explicit quadrature formula
//
//     w0_j(x) = -(2 / (h_j v_j(x))) * (int_0^x phi_j + C_j),
//
// with C_1, C_2 fixed by the Dirichlet data and C_3 by the Kirchhoff
// condition, C_3 = -(h_1 C_1 + h_2 C_2)/h_3.

#include <array>
#include <cmath>
#include <string>

#include "junction/config.hpp"
#include "junction/edge_function.hpp"

namespace junction {

struct LimitSolution {
    std::array<EdgeFunction, 3> w0;
    std::array<double, 3> C{};

    std::array<double, 3> w0_at_zero() const {
        return {w0[0].eval(0.0), w0[1].eval(0.0), w0[2].eval(0.0)};
    }
};

// Vertex flux balance sum_j v_j h_j^2 values_j; vanishes exactly when the
// node problems of the corresponding order are solvable.
inline double kirchhoff_residual(const std::array<double, 3>& values, const JunctionSpec& spec,
                                 const VelocityField& velocity) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j)
        acc += velocity.node_constants[j] * spec.h[j] * spec.h[j] * values[j];
    return acc;
}

inline LimitSolution solve_limit(const Config& cfg) {
    const auto& sp = cfg.spec;
    for (int j = 0; j < 3; ++j) {
        const EdgeFunction& v = cfg.velocity.axial[j];
        double prev = v.eval(0.0);
        for (int k = 0; k <= 2048; ++k) {
            double x = sp.ell[j] * k / 2048.0;
            double val = v.eval(x);
            if (std::abs(val) < 1e-12 || val * prev < 0.0)
                throw SolverError("solve_limit: axial velocity vanishes on edge " + std::to_string(j + 1) +
                                  " near x = " + std::to_string(x));
            prev = val;
        }
    }

    LimitSolution sol;
    for (int j = 0; j < 2; ++j) {
        double v_end = cfg.velocity.axial[j].eval(sp.ell[j]);
        sol.C[j] = -0.5 * sp.h[j] * v_end * sp.q[j] - cfg.source.phi[j].integral_full();
    }
    sol.C[2] = -(sp.h[0] * sol.C[0] + sp.h[1] * sol.C[1]) / sp.h[2];

    for (int j = 0; j < 3; ++j) {
        const EdgeFunction& v = cfg.velocity.axial[j];
        const EdgeFunction& phi = cfg.source.phi[j];
        const double hj = sp.h[j];
        const double Cj = sol.C[j];
        sol.w0[j] = EdgeFunction::sample(
            sp.ell[j], [&](double x) { return -2.0 / (hj * v.eval(x)) * (phi.integral(x) + Cj); },
            cfg.grid_per_unit);
    }
    return sol;
}

}  // namespace junction
