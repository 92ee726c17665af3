#pragma once

// Exponential boundary layers at the base of cylinder 3. In the stretched
// distance xi3 = (ell_3 - x_3)/eps each layer term solves
//
//     -a_33 P'' - v_3(ell_3) P' = 0,  P(0) = Phi_k,  P -> 0,
//
// whose decaying solution is P(xi3) = Phi_k exp(-rate * xi3) with
// rate = v_3(ell_3)/a_33 > 0. The amplitudes reconcile the Dirichlet datum:
// Phi_0 = q_3 - w_0(ell_3) and Phi_k = -w_k(ell_3) for k >= 1. Edges 1 and 2
// need no layer: their Dirichlet data are matched through C_1, C_2.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "junction/config.hpp"
#include "junction/regular_expansion.hpp"

namespace junction {

struct BoundaryLayerTerm {
    int order = 0;
    double amplitude = 0.0;   // Phi_k
    double decay_rate = 0.0;  // v_3(ell_3) / a_33
};

inline double eval_layer(const BoundaryLayerTerm& term, double xi3) {
    if (xi3 < 0.0) throw std::invalid_argument("eval_layer: stretched distance must be nonnegative");
    return term.amplitude * std::exp(-term.decay_rate * xi3);
}

inline std::vector<BoundaryLayerTerm> build_layer_terms(const Expansion& expn, const Config& cfg) {
    const double v_end = cfg.velocity.axial[2].eval(cfg.spec.ell[2]);
    const double a33 = cfg.diffusion.axial_constants[2];
    if (!(v_end > 0.0) || !(a33 > 0.0))
        throw SolverError("build_layer_terms: need v_3(ell_3) > 0 and a_33 > 0");
    const double rate = v_end / a33;
    std::vector<BoundaryLayerTerm> terms;
    for (int k = 0; k <= expn.max_order; ++k) {
        BoundaryLayerTerm t;
        t.order = k;
        t.decay_rate = rate;
        double w_end = expn.w(k, 2).eval(cfg.spec.ell[2]);
        t.amplitude = (k == 0) ? cfg.spec.q[2] - w_end : -w_end;
        terms.push_back(t);
    }
    return terms;
}

}  // namespace junction
