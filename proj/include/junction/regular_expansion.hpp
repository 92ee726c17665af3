#pragma once

// Higher-order terms of the regular expansion inside the cylinders.
//
// Axial terms obey the first-order recurrence
//
//     w_k(x) = ( a w_{k-1}'(x) + c_k ) / v(x),     k >= 1,
//
// with c_k = -a w_{k-1}'(ell_j) on edges 1, 2 (so w_k vanishes at the far
// bases) and c_k^(3) = -(h_1^2 c_k^(1) + h_2^2 c_k^(2)) / h_3^2 (so the
// vertex flux balance holds at order k; with the axial velocity constant near
// the origin, w_k(0) = c_k / v_j there).
//
// Cross-section correctors u_k are mean-zero solutions of disk Neumann
// problems parameterized by the axial coordinate:
//
//   k = 1:  -div(D grad u_1) = -(v w_0)' - w_0 div V,
//           -(D grad u_1).nu = phi - w_0 V.nu
//   k >= 2: -div(D grad u_k) = a u_{k-2}'' - (v u_{k-1})' - div(V [w_{k-1} + u_{k-1}]),
//           -(D grad u_k).nu = -[w_{k-1} + u_{k-1}] V.nu
//
// (V = transverse velocity, primes are axial derivatives, div/grad act in the
// fast cross-section variables). Correctors vanish identically outside the
// axial support of the lateral source and the transverse velocity; inside it
// they are solved on a slice grid and interpolated by per-vertex splines, so
// axial derivatives up to second order come from the splines.

#include <array>
#include <cmath>
#include <future>
#include <memory>
#include <vector>

#include "junction/config.hpp"
#include "junction/cross_section.hpp"
#include "junction/disk_mesh.hpp"
#include "junction/limit_graph.hpp"

namespace junction {

struct RegularEdgeTerm {
    int order = 0;
    std::array<EdgeFunction, 3> w;
    std::array<double, 3> c{};

    std::array<double, 3> w_at_zero() const {
        return {w[0].eval(0.0), w[1].eval(0.0), w[2].eval(0.0)};
    }
};

inline RegularEdgeTerm next_w(const RegularEdgeTerm& prev, const Config& cfg) {
    const auto& sp = cfg.spec;
    RegularEdgeTerm out;
    out.order = prev.order + 1;
    for (int j = 0; j < 2; ++j)
        out.c[j] = -cfg.diffusion.axial_constants[j] * prev.w[j].deriv1(sp.ell[j]);
    out.c[2] = -(sp.h[0] * sp.h[0] * out.c[0] + sp.h[1] * sp.h[1] * out.c[1]) / (sp.h[2] * sp.h[2]);
    for (int j = 0; j < 3; ++j) {
        const EdgeFunction& v = cfg.velocity.axial[j];
        const EdgeFunction& wp = prev.w[j];
        const double a = cfg.diffusion.axial_constants[j];
        const double ck = out.c[j];
        double vprev = v.eval(0.0);
        for (int k = 0; k <= 1024; ++k) {
            double x = sp.ell[j] * k / 1024.0;
            double val = v.eval(x);
            if (std::abs(val) < 1e-12 || val * vprev < 0.0)
                throw SolverError("next_w: axial velocity vanishes on edge " + std::to_string(j + 1));
            vprev = val;
        }
        out.w[j] = EdgeFunction::sample(
            sp.ell[j], [&](double x) { return (a * wp.deriv1(x) + ck) / v.eval(x); }, cfg.grid_per_unit);
    }
    return out;
}

// Per-vertex splines of corrector slices over the axial support interval.
class SliceField {
public:
    SliceField() = default;

    SliceField(double lo, double hi, std::vector<double> slice_x, const std::vector<std::vector<double>>& slices)
        : lo_(lo), hi_(hi), slice_x_(std::move(slice_x)) {
        const std::size_t nv = slices.empty() ? 0 : slices.front().size();
        const double len = hi_ - lo_;
        vertex_splines_.reserve(nv);
        std::vector<double> samples(slice_x_.size());
        for (std::size_t v = 0; v < nv; ++v) {
            for (std::size_t s = 0; s < slice_x_.size(); ++s) samples[s] = slices[s][v];
            vertex_splines_.emplace_back(len, samples);
        }
    }

    bool empty() const { return vertex_splines_.empty(); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    bool inside(double x) const { return !empty() && x >= lo_ && x <= hi_; }

    // Nodal vector of the axial derivative of given order (0, 1, or 2) at x;
    // identically zero outside the support.
    std::vector<double> nodal(double x, int deriv, std::size_t n_vertices) const {
        std::vector<double> out(n_vertices, 0.0);
        if (!inside(x)) return out;
        double t = x - lo_;
        for (std::size_t v = 0; v < vertex_splines_.size(); ++v) {
            const EdgeFunction& s = vertex_splines_[v];
            out[v] = deriv == 0 ? s.eval(t) : (deriv == 1 ? s.deriv1(t) : s.deriv2(t));
        }
        return out;
    }

    double value(double x, std::size_t vertex, int deriv = 0) const {
        if (!inside(x)) return 0.0;
        double t = x - lo_;
        const EdgeFunction& s = vertex_splines_[vertex];
        return deriv == 0 ? s.eval(t) : (deriv == 1 ? s.deriv1(t) : s.deriv2(t));
    }

private:
    double lo_ = 0.0, hi_ = 0.0;
    std::vector<double> slice_x_;
    std::vector<EdgeFunction> vertex_splines_;
};

struct CrossSectionCorrector {
    int order = 0;
    struct Edge {
        bool zero = true;
        std::shared_ptr<const DiskMesh> mesh;
        SliceField field;
    };
    std::array<Edge, 3> edge;

    std::vector<double> nodal(int j, double x, int deriv = 0) const {
        const Edge& e = edge[static_cast<std::size_t>(j)];
        if (e.zero || !e.mesh) return {};
        return e.field.nodal(x, deriv, static_cast<std::size_t>(e.mesh->n_vertices()));
    }

    double interpolate(int j, double x, const Vec2& xi) const {
        const Edge& e = edge[static_cast<std::size_t>(j)];
        if (e.zero || !e.field.inside(x)) return 0.0;
        auto [tri, lam] = e.mesh->locate(xi);
        const auto& t = e.mesh->triangles[static_cast<std::size_t>(tri)];
        double acc = 0.0;
        for (int i = 0; i < 3; ++i)
            acc += lam[static_cast<std::size_t>(i)] *
                   e.field.value(x, static_cast<std::size_t>(t[static_cast<std::size_t>(i)]));
        return acc;
    }
};

// Axial derivative field of a solved corrector at a slice (spec operation);
// returns the zero field outside the support.
inline std::vector<double> corrector_x_derivative(const CrossSectionCorrector& corr, int edge, double x,
                                                  int deriv_order) {
    if (deriv_order < 0 || deriv_order > 2)
        throw std::invalid_argument("corrector_x_derivative: derivative order must be <= 2");
    return corr.nodal(edge, x, deriv_order);
}

struct ExpansionOptions {
    int corrector_rings = 24;
    int slices_per_support = 64;
    double support_pad = 0.05;  // relative padding of the support hull
    CrossSectionOptions cross_section;
    int threads = 0;  // 0 = keep sequential
};

// All terms of orders <= max_order: w_0 (limit), w_k with constants, and the
// correctors u_k (u_0 = 0 is implicit).
struct Expansion {
    int max_order = 0;
    LimitSolution limit;
    std::vector<RegularEdgeTerm> w_terms;              // index k: order k (w_terms[0].w = limit w0)
    std::vector<CrossSectionCorrector> correctors;     // index k-1: order k
    std::array<std::shared_ptr<DiskMesh>, 3> meshes;

    const EdgeFunction& w(int k, int j) const { return w_terms[static_cast<std::size_t>(k)].w[static_cast<std::size_t>(j)]; }
    double w_zero(int k, int j) const { return w_terms[static_cast<std::size_t>(k)].w[static_cast<std::size_t>(j)].eval(0.0); }
    const CrossSectionCorrector* u(int k) const {
        if (k < 1 || k > static_cast<int>(correctors.size())) return nullptr;
        return &correctors[static_cast<std::size_t>(k - 1)];
    }
};

namespace detail {

// Support hull of the corrector data on edge j: union of the lateral source
// support and the transverse-velocity profile support, padded and clamped.
inline std::optional<std::pair<double, double>> corrector_hull(const Config& cfg, int j, double pad_rel) {
    double lo = 1e300, hi = -1e300;
    auto widen = [&](const std::optional<std::pair<double, double>>& s) {
        if (!s || s->first >= s->second) return;
        lo = std::min(lo, s->first);
        hi = std::max(hi, s->second);
    };
    widen(cfg.source.phi_form[static_cast<std::size_t>(j)].support());
    if (cfg.velocity.transverse[static_cast<std::size_t>(j)].present)
        widen(cfg.velocity.transverse[static_cast<std::size_t>(j)].profile_form.support());
    if (hi <= lo) return std::nullopt;
    double pad = pad_rel * (hi - lo);
    return std::make_pair(std::max(0.0, lo - pad), std::min(cfg.spec.ell[static_cast<std::size_t>(j)], hi + pad));
}

}  // namespace detail

// Solve one corrector slice of order k (k >= 1) on edge j at axial station x.
inline NeumannSolution corrector_slice(const Config& cfg, const Expansion& exp_so_far, int order, int j,
                                       double x, const DiskMesh& mesh, const CrossSectionOptions& opts) {
    const auto& trans = cfg.velocity.transverse[static_cast<std::size_t>(j)];
    const EdgeFunction& v = cfg.velocity.axial[static_cast<std::size_t>(j)];
    const double a = cfg.diffusion.axial_constants[static_cast<std::size_t>(j)];
    CrossSectionData data;
    std::vector<double> g_nodal, u_prev;

    if (order == 1) {
        const double phi_x = cfg.source.phi[static_cast<std::size_t>(j)].eval(x);
        const double w0_x = exp_so_far.w(0, j).eval(x);
        const double hj = cfg.spec.h[static_cast<std::size_t>(j)];
        data.g = [phi_x, hj](const Vec2&) { return 2.0 * phi_x / hj; };
        data.b = [phi_x](const Vec2&) { return phi_x; };
        if (trans.present) {
            const double s = trans.profile.eval(x);
            data.G = [&trans, s, w0_x](const Vec2& p) {
                return Vec2{s * w0_x * trans.c1.eval(p.x, p.y), s * w0_x * trans.c2.eval(p.x, p.y)};
            };
        }
    } else {
        const int k = order - 1;
        const std::size_t nv = static_cast<std::size_t>(mesh.n_vertices());
        const CrossSectionCorrector* uk = exp_so_far.u(k);
        const CrossSectionCorrector* ukm1 = exp_so_far.u(k - 1);
        g_nodal.assign(nv, 0.0);
        if (ukm1 && !ukm1->edge[static_cast<std::size_t>(j)].zero) {
            auto dd = ukm1->nodal(j, x, 2);
            for (std::size_t i = 0; i < nv; ++i) g_nodal[i] += a * dd[i];
        }
        if (uk && !uk->edge[static_cast<std::size_t>(j)].zero) {
            auto u0 = uk->nodal(j, x, 0);
            auto u1 = uk->nodal(j, x, 1);
            const double vx = v.eval(x), dvx = v.deriv1(x);
            for (std::size_t i = 0; i < nv; ++i) g_nodal[i] -= dvx * u0[i] + vx * u1[i];
            u_prev = std::move(u0);
        } else {
            u_prev.assign(nv, 0.0);
        }
        data.g_nodal = &g_nodal;
        if (trans.present) {
            const double s = trans.profile.eval(x);
            const double wk_x = exp_so_far.w(k, j).eval(x);
            data.G = [&trans, s, wk_x](const Vec2& p) {
                return Vec2{s * wk_x * trans.c1.eval(p.x, p.y), s * wk_x * trans.c2.eval(p.x, p.y)};
            };
            data.pvec = [&trans, s](const Vec2& p) {
                return Vec2{s * trans.c1.eval(p.x, p.y), s * trans.c2.eval(p.x, p.y)};
            };
            data.pvec_scale = &u_prev;
        }
    }
    return solve_cross_section_problem(mesh, cfg.diffusion.cross[static_cast<std::size_t>(j)], data, opts);
}

// Build all terms of the expansion up to max_order.
inline Expansion expand_regular(const Config& cfg, int max_order, const ExpansionOptions& opts = {}) {
    Expansion exp;
    exp.max_order = max_order;
    exp.limit = solve_limit(cfg);
    RegularEdgeTerm w0;
    w0.order = 0;
    w0.w = exp.limit.w0;
    exp.w_terms.push_back(w0);
    for (int k = 1; k <= max_order; ++k) exp.w_terms.push_back(next_w(exp.w_terms.back(), cfg));

    for (int j = 0; j < 3; ++j)
        exp.meshes[static_cast<std::size_t>(j)] =
            std::make_shared<DiskMesh>(make_disk_mesh(cfg.spec.h[static_cast<std::size_t>(j)], opts.corrector_rings));

    for (int k = 1; k <= max_order; ++k) {
        CrossSectionCorrector corr;
        corr.order = k;
        for (int j = 0; j < 3; ++j) {
            auto& edge = corr.edge[static_cast<std::size_t>(j)];
            edge.mesh = exp.meshes[static_cast<std::size_t>(j)];
            auto hull = detail::corrector_hull(cfg, j, opts.support_pad);
            if (!hull) continue;  // no source, no transverse velocity: u_k = 0
            auto [lo, hi] = *hull;
            const int ns = std::max(9, opts.slices_per_support + 1);
            std::vector<double> slice_x(static_cast<std::size_t>(ns));
            for (int s = 0; s < ns; ++s)
                slice_x[static_cast<std::size_t>(s)] = lo + (hi - lo) * s / (ns - 1);
            std::vector<std::vector<double>> slices(static_cast<std::size_t>(ns));
            auto solve_range = [&](int begin, int end) {
                for (int s = begin; s < end; ++s)
                    slices[static_cast<std::size_t>(s)] =
                        corrector_slice(cfg, exp, k, j, slice_x[static_cast<std::size_t>(s)],
                                        *edge.mesh, opts.cross_section)
                            .values;
            };
            if (opts.threads > 1) {
                std::vector<std::future<void>> futs;
                int chunk = (ns + opts.threads - 1) / opts.threads;
                for (int t = 0; t < opts.threads; ++t)
                    futs.push_back(std::async(std::launch::async, solve_range, t * chunk,
                                              std::min(ns, (t + 1) * chunk)));
                for (auto& f : futs) f.get();
            } else {
                solve_range(0, ns);
            }
            edge.field = SliceField(lo, hi, slice_x, slices);
            edge.zero = false;
        }
        exp.correctors.push_back(std::move(corr));
    }
    return exp;
}

}  // namespace junction
