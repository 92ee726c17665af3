#pragma once

// Composite approximation: the partial sum
//
//   U^(m)(x) = sum_{k<=m} eps^k ( ubar_k + Nbar_k + Pibar_k ),
//
//   ubar_k  = sum_i chi_i(x_i) ( w_k^(i)(x_i) + u_k^(i)(x_i, xbar_i/eps) ),
//   Nbar_k  = ( 1 - sum_i chi_i(x_i) ) N_k(x/eps),
//   Pibar_k = chi3(x_3) Pi_k((ell_3 - x_3)/eps),
//
// with smooth cut-offs chi_i rising across [eps ell0 + delta, eps ell0 + 2
// delta] and chi3 rising across [ell_3 - 2 delta, ell_3 - delta]. At the far
// bases the Dirichlet data are reproduced exactly: w_0 carries q_1, q_2 by
// construction, the layer amplitudes carry q_3, and all higher terms vanish
// there.

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "junction/boundary_layer.hpp"
#include "junction/config.hpp"
#include "junction/node_solver.hpp"
#include "junction/regular_expansion.hpp"
#include "junction/smooth_profiles.hpp"

namespace junction {

struct CutoffFamily {
    double eps = 0.0;
    double delta = 0.0;
    double ell0 = 0.0;
    double ell3 = 0.0;

    double edge(double x) const { return smooth_step((x - (eps * ell0 + delta)) / delta); }
    double edge_d1(double x) const { return smooth_step_d1((x - (eps * ell0 + delta)) / delta) / delta; }
    double edge_d2(double x) const { return smooth_step_d2((x - (eps * ell0 + delta)) / delta) / (delta * delta); }

    double base(double x) const { return smooth_step((x - (ell3 - 2.0 * delta)) / delta); }
    double base_d1(double x) const { return smooth_step_d1((x - (ell3 - 2.0 * delta)) / delta) / delta; }
    double base_d2(double x) const { return smooth_step_d2((x - (ell3 - 2.0 * delta)) / delta) / (delta * delta); }
};

class CompositeApproximation {
public:
    CompositeApproximation(const Config& cfg, const Expansion& expansion,
                           std::vector<std::shared_ptr<const NodeTerm>> node_terms,
                           std::vector<BoundaryLayerTerm> layers, int order, double eps)
        : cfg_(&cfg), expansion_(&expansion), node_terms_(std::move(node_terms)), layers_(std::move(layers)),
          order_(order), eps_(eps) {
        if (order_ > expansion.max_order)
            throw std::invalid_argument("CompositeApproximation: expansion does not reach the requested order");
        if (static_cast<int>(node_terms_.size()) < order_ + 1 ||
            static_cast<int>(layers_.size()) < order_ + 1)
            throw std::invalid_argument("CompositeApproximation: need node and layer terms up to the order");
        const auto& sp = cfg.spec;
        for (int i = 0; i < 3; ++i)
            if (!(eps_ * sp.ell0 + 2.0 * sp.delta < sp.ell[static_cast<std::size_t>(i)] - 2.0 * sp.delta))
                throw ValidationError("CompositeApproximation",
                                      "delta bands overlap on edge " + std::to_string(i + 1));
        cutoffs_ = CutoffFamily{eps_, sp.delta, sp.ell0, sp.ell[2]};
    }

    int order() const { return order_; }
    double eps() const { return eps_; }
    const CutoffFamily& cutoffs() const { return cutoffs_; }
    const Config& config() const { return *cfg_; }
    const Expansion& expansion() const { return *expansion_; }
    const NodeTerm& node_term(int k) const { return *node_terms_[static_cast<std::size_t>(k)]; }
    const BoundaryLayerTerm& layer(int k) const { return layers_[static_cast<std::size_t>(k)]; }

    // Region of a physical point: 1..3 for the cylinders, 0 for the node.
    Region classify(const Vec3& x) const {
        const auto& sp = cfg_->spec;
        for (int i = 0; i < 3; ++i) {
            Vec2 xb = transverse_coords(x, i);
            if (x[i] > eps_ * sp.ell0 && x[i] <= sp.ell[static_cast<std::size_t>(i)] + 1e-14 &&
                xb.norm() <= eps_ * sp.h[static_cast<std::size_t>(i)] * (1.0 + 1e-9))
                return static_cast<Region>(i + 1);
        }
        bool in_box = true;
        for (int d = 0; d < 3; ++d)
            if (std::abs(x[d]) > eps_ * sp.ell0 * (1.0 + 1e-12)) in_box = false;
        if (in_box) return Region::Node;
        throw ValidationError("evaluate_point", "point outside the thin junction");
    }

    double evaluate(const Vec3& x) const {
        const Region region = classify(x);
        const int edge = static_cast<int>(region) - 1;  // -1 for the node
        double chi_sum = 0.0, chi_edge = 0.0;
        if (edge >= 0) {
            chi_edge = cutoffs_.edge(x[edge]);
            chi_sum = chi_edge;  // the other coordinates are below eps*h < eps*ell0 + delta
        }
        double value = 0.0;
        double eps_k = 1.0;
        for (int k = 0; k <= order_; ++k, eps_k *= eps_) {
            double term = 0.0;
            if (edge >= 0 && chi_edge > 0.0) {
                double wk = expansion_->w(k, edge).eval(x[edge]);
                double uk = 0.0;
                if (const CrossSectionCorrector* corr = expansion_->u(k)) {
                    Vec2 xb = transverse_coords(x, edge);
                    uk = corr->interpolate(edge, x[edge], Vec2{xb.x / eps_, xb.y / eps_});
                }
                term += chi_edge * (wk + uk);
            }
            if (chi_sum < 1.0) {
                Vec3 xi{x[0] / eps_, x[1] / eps_, x[2] / eps_};
                term += (1.0 - chi_sum) * node_terms_[static_cast<std::size_t>(k)]->value(xi);
            }
            if (edge == 2) {
                double chi3 = cutoffs_.base(x[2]);
                if (chi3 > 0.0)
                    term += chi3 * eval_layer(layers_[static_cast<std::size_t>(k)],
                                              (cfg_->spec.ell[2] - x[2]) / eps_);
            }
            value += eps_k * term;
        }
        return value;
    }

    // Cross-section average E_eps^(i) at station x_i: disk average of the
    // composite by polar quadrature in the fast transverse variables.
    double cross_section_average(int edge, double x_axial, int n_radial = 10, int n_angular = 24) const {
        const double h = cfg_->spec.h[static_cast<std::size_t>(edge)];
        const GaussRule& rule = gauss_legendre(n_radial);
        double acc = 0.0;
        for (int it = 0; it < n_angular; ++it) {
            double th = 2.0 * M_PI * (it + 0.5) / n_angular;
            double c = std::cos(th), s = std::sin(th);
            for (int ir = 0; ir < n_radial; ++ir) {
                double r = 0.5 * h * (1.0 + rule.nodes[static_cast<std::size_t>(ir)]);
                double w = 0.5 * h * rule.weights[static_cast<std::size_t>(ir)] * (2.0 * M_PI / n_angular) * r;
                Vec3 x{};
                x[edge] = x_axial;
                x[NodeDomain::trans_axis(edge, 0)] = eps_ * r * c;
                x[NodeDomain::trans_axis(edge, 1)] = eps_ * r * s;
                acc += w * evaluate(x);
            }
        }
        return acc / (M_PI * h * h);
    }

private:
    const Config* cfg_;
    const Expansion* expansion_;
    std::vector<std::shared_ptr<const NodeTerm>> node_terms_;
    std::vector<BoundaryLayerTerm> layers_;
    int order_;
    double eps_;
    CutoffFamily cutoffs_;
};

inline CompositeApproximation assemble(const Config& cfg, const Expansion& expansion,
                                       std::vector<std::shared_ptr<const NodeTerm>> node_terms,
                                       std::vector<BoundaryLayerTerm> layers, int order, double eps) {
    return CompositeApproximation(cfg, expansion, std::move(node_terms), std::move(layers), order, eps);
}

}  // namespace junction
