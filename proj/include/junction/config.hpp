#pragma once

// Problem data for the thin three-cylinder junction: geometry, the structured
// velocity field, diffusion matrices, and lateral sources, together with
// loading from JSON and validation of the standing assumptions.
//
// Geometry: three cylinders of radius eps*h_i along the coordinate axes,
// occupying eps*ell0 < x_i < ell_i, joined through a node of size O(eps).
// Velocity on cylinder i: axial component v_i(x_i) (order one, sign pattern
// v_1 < 0, v_2 > 0, v_3 > 0), transverse components eps * s(x_i) * P(fast
// vars). Diffusion on cylinder i: constant axial entry a_ii, a symmetric 2x2
// cross-section block of the fast variables, no axial/transverse coupling;
// a full symmetric 3x3 matrix on the node. Lateral sources phi_i are smooth
// with compact support inside (0, ell_i).

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "junction/function_forms.hpp"
#include "junction/numerics.hpp"

namespace junction {

struct ValidationError : std::runtime_error {
    std::string field;
    explicit ValidationError(const std::string& field_, const std::string& what)
        : std::runtime_error(field_ + ": " + what), field(field_) {}
};

struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct JunctionSpec {
    double ell0 = 0.3;               // node size parameter, in (0, 1/3)
    std::array<double, 3> h{};       // cylinder radii (before eps scaling)
    std::array<double, 3> ell{};     // cylinder lengths, >= 1
    std::array<double, 3> q{};       // Dirichlet data at the far bases, > 0
    double delta = 0.1;              // cut-off margin
};

// Transverse velocity on one edge: Vbar(x, xi) = s(x) * (c1(xi), c2(xi)).
struct TransverseVelocity {
    bool present = false;
    ScalarForm profile_form;
    EdgeFunction profile;
    Poly2 c1 = Poly2::constant(0.0);
    Poly2 c2 = Poly2::constant(0.0);

    Vec2 eval(double x, const Vec2& xi) const {
        if (!present) return {0.0, 0.0};
        double s = profile.eval(x);
        return {s * c1.eval(xi.x, xi.y), s * c2.eval(xi.x, xi.y)};
    }
    double divergence(double x, const Vec2& xi) const {
        if (!present) return 0.0;
        return profile.eval(x) * (c1.ds(xi.x, xi.y) + c2.dt(xi.x, xi.y));
    }
};

struct VelocityField {
    std::array<ScalarForm, 3> axial_form;
    std::array<EdgeFunction, 3> axial;
    std::array<double, 3> node_constants{};
    std::array<TransverseVelocity, 3> transverse;
    std::array<std::pair<double, double>, 3> constant_near_origin{};
    std::pair<double, double> constant_near_ell3{};
    // Gradient of the node potential in fast variables, filled by the node
    // solver once the potential has been computed.
    std::function<Vec3(const Vec3&)> node_velocity;
};

struct DiffusionSpec {
    std::array<double, 3> axial_constants{};  // a_11^(1), a_22^(2), a_33^(3)
    std::array<MatrixField2, 3> cross;        // 2x2 cross-section blocks
    MatrixField3 node_matrix;
    std::array<double, 4> kappa0{};           // ellipticity bounds, region 0..3
    std::array<double, 4> kappa1{};
};

struct LateralSource {
    std::array<ScalarForm, 3> phi_form;
    std::array<EdgeFunction, 3> phi;
};

struct Tolerances {
    double equality = 1e-12;
    double compatibility = 1e-10;
    double solver = 1e-10;
};

struct Config {
    JunctionSpec spec;
    VelocityField velocity;
    DiffusionSpec diffusion;
    LateralSource source;
    Tolerances tol;
    std::size_t grid_per_unit = 512;
    json raw;
};

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

namespace detail {

template <typename T, std::size_t N>
std::array<T, N> get_array(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing field '" + key + "'");
    auto v = j.at(key).get<std::vector<T>>();
    if (v.size() != N) throw ConfigError("field '" + key + "' must have " + std::to_string(N) + " entries");
    std::array<T, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = v[i];
    return out;
}

inline std::pair<double, double> get_interval(const json& j, const std::string& where) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != 2 || v[0] > v[1]) throw ConfigError(where + ": expected [lo, hi]");
    return {v[0], v[1]};
}

}  // namespace detail

inline Config load_spec_json(const json& j) {
    Config cfg;
    cfg.raw = j;
    if (j.contains("grid_per_unit")) cfg.grid_per_unit = j.at("grid_per_unit").get<std::size_t>();
    if (j.contains("tolerances") && j.at("tolerances").contains("equality"))
        cfg.tol.equality = j.at("tolerances").at("equality").get<double>();

    if (!j.contains("geometry")) throw ConfigError("missing 'geometry' section");
    const json& g = j.at("geometry");
    cfg.spec.ell0 = g.at("ell0").get<double>();
    cfg.spec.h = detail::get_array<double, 3>(g, "h");
    cfg.spec.ell = detail::get_array<double, 3>(g, "ell");
    cfg.spec.q = detail::get_array<double, 3>(g, "q");
    cfg.spec.delta = g.contains("delta") ? g.at("delta").get<double>()
                                         : std::min({cfg.spec.ell[0], cfg.spec.ell[1], cfg.spec.ell[2]}) / 10.0;

    if (cfg.spec.ell0 <= 0.0 || cfg.spec.ell0 >= 1.0 / 3.0)
        throw ValidationError("geometry.ell0", "ell0 must lie in (0, 1/3)");
    for (int i = 0; i < 3; ++i) {
        if (cfg.spec.h[i] <= 0.0) throw ValidationError("geometry.h", "radii must be positive");
        if (cfg.spec.ell[i] < 1.0) throw ValidationError("geometry.ell", "lengths must be >= 1");
        if (cfg.spec.q[i] <= 0.0) throw ValidationError("geometry.q", "Dirichlet data must be positive");
    }
    if (cfg.spec.delta <= 0.0) throw ValidationError("geometry.delta", "delta must be positive");

    if (!j.contains("velocity")) throw ConfigError("missing 'velocity' section");
    const json& v = j.at("velocity");
    cfg.velocity.node_constants = detail::get_array<double, 3>(v, "node_constants");
    if (!v.contains("axial") || !v.at("axial").is_array() || v.at("axial").size() != 3)
        throw ConfigError("velocity.axial must be an array of 3 forms");
    for (int i = 0; i < 3; ++i) {
        cfg.velocity.axial_form[i] = parse_scalar_form(v.at("axial")[static_cast<std::size_t>(i)],
                                                       "velocity.axial[" + std::to_string(i) + "]");
        cfg.velocity.axial[i] = cfg.velocity.axial_form[i].to_edge_function(cfg.spec.ell[i], cfg.grid_per_unit);
    }
    {
        const auto nc = cfg.velocity.node_constants;
        if (!(nc[0] < 0.0 && nc[1] > 0.0 && nc[2] > 0.0))
            throw ValidationError("velocity.node_constants", "sign pattern must be (v1 < 0, v2 > 0, v3 > 0)");
        double flux = 0.0;
        for (int i = 0; i < 3; ++i) flux += cfg.spec.h[i] * cfg.spec.h[i] * nc[i];
        if (std::abs(flux) > cfg.tol.equality)
            throw ValidationError("velocity.node_constants",
                                  "node flux compatibility violated: sum h_i^2 v_i = " + std::to_string(flux));
    }
    if (v.contains("constant_near_origin")) {
        const json& cno = v.at("constant_near_origin");
        for (int i = 0; i < 3; ++i)
            cfg.velocity.constant_near_origin[i] =
                detail::get_interval(cno[static_cast<std::size_t>(i)], "velocity.constant_near_origin");
    } else {
        for (int i = 0; i < 3; ++i) cfg.velocity.constant_near_origin[i] = {0.0, 0.3};
    }
    cfg.velocity.constant_near_ell3 =
        v.contains("constant_near_ell3")
            ? detail::get_interval(v.at("constant_near_ell3"), "velocity.constant_near_ell3")
            : std::make_pair(cfg.spec.ell[2] - 0.25, cfg.spec.ell[2]);
    if (v.contains("transverse")) {
        const json& tr = v.at("transverse");
        if (!tr.is_array() || tr.size() != 3) throw ConfigError("velocity.transverse must be an array of 3");
        for (int i = 0; i < 3; ++i) {
            const json& ti = tr[static_cast<std::size_t>(i)];
            if (ti.is_null()) continue;
            TransverseVelocity& t = cfg.velocity.transverse[i];
            std::string where = "velocity.transverse[" + std::to_string(i) + "]";
            t.profile_form = parse_scalar_form(ti.at("profile"), where + ".profile");
            if (!t.profile_form.support())
                throw ValidationError(where + ".profile", "transverse profile must have compact support");
            auto sp = *t.profile_form.support();
            if (sp.first < sp.second && (sp.first <= 0.0 || sp.second >= cfg.spec.ell[i]))
                throw ValidationError(where + ".profile", "support must lie strictly inside (0, ell)");
            t.profile = t.profile_form.to_edge_function(cfg.spec.ell[i], cfg.grid_per_unit);
            t.c1 = ti.contains("c1") ? parse_poly2(ti.at("c1"), where + ".c1") : Poly2::constant(0.0);
            t.c2 = ti.contains("c2") ? parse_poly2(ti.at("c2"), where + ".c2") : Poly2::constant(0.0);
            t.present = !(t.c1.is_zero() && t.c2.is_zero());
        }
    }

    if (!j.contains("diffusion")) throw ConfigError("missing 'diffusion' section");
    const json& d = j.at("diffusion");
    cfg.diffusion.axial_constants = detail::get_array<double, 3>(d, "axial_constants");
    for (int i = 0; i < 3; ++i)
        if (cfg.diffusion.axial_constants[i] <= 0.0)
            throw ValidationError("diffusion.axial_constants", "axial diffusion must be positive");
    if (d.contains("cross_matrices")) {
        const json& cm = d.at("cross_matrices");
        for (int i = 0; i < 3; ++i)
            cfg.diffusion.cross[i] =
                parse_matrix2(cm[static_cast<std::size_t>(i)], "diffusion.cross_matrices[" + std::to_string(i) + "]");
    } else {
        for (int i = 0; i < 3; ++i) cfg.diffusion.cross[i] = MatrixField2::isotropic(1.0);
    }
    cfg.diffusion.node_matrix = d.contains("node_matrix")
                                    ? parse_matrix3(d.at("node_matrix"), "diffusion.node_matrix")
                                    : MatrixField3::isotropic(1.0);
    if (d.contains("kappa0"))
        cfg.diffusion.kappa0 = detail::get_array<double, 4>(d, "kappa0");
    else
        cfg.diffusion.kappa0 = {0.5, 0.5, 0.5, 0.5};
    if (d.contains("kappa1"))
        cfg.diffusion.kappa1 = detail::get_array<double, 4>(d, "kappa1");
    else
        cfg.diffusion.kappa1 = {10.0, 10.0, 10.0, 10.0};

    if (j.contains("sources")) {
        const json& s = j.at("sources");
        if (s.contains("phi")) {
            const json& sp = s.at("phi");
            for (int i = 0; i < 3; ++i)
                cfg.source.phi_form[i] =
                    parse_scalar_form(sp[static_cast<std::size_t>(i)], "sources.phi[" + std::to_string(i) + "]");
        }
    }
    for (int i = 0; i < 3; ++i) {
        const ScalarForm& f = cfg.source.phi_form[i];
        if (auto sup = f.support(); sup && sup->first < sup->second) {
            if (sup->first <= 0.0 || sup->second >= cfg.spec.ell[i])
                throw ValidationError("sources.phi[" + std::to_string(i) + "]",
                                      "support must lie strictly inside (0, ell)");
        } else if (f.kind != ScalarForm::Kind::Zero) {
            throw ValidationError("sources.phi[" + std::to_string(i) + "]",
                                  "lateral source must have compact support");
        }
        cfg.source.phi[i] = f.to_edge_function(cfg.spec.ell[i], cfg.grid_per_unit);
    }
    return cfg;
}

inline Config load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("parse error in '" + path + "': " + e.what());
    }
    return load_spec_json(j);
}

// ---------------------------------------------------------------------------
// Assumption validation
// ---------------------------------------------------------------------------

struct ValidationCheck {
    std::string id;
    bool pass = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    void add(std::string id, bool pass, std::string detail) {
        checks.push_back({std::move(id), pass, std::move(detail)});
    }
};

namespace detail {

// Eigenvalue range of a symmetric 3x3 matrix by cyclic Jacobi sweeps.
inline std::pair<double, double> sym3_eig_range(double m[3][3]) {
    double a[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a[i][j] = m[i][j];
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off < 1e-14) break;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                double theta = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
                double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < 3; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    double lo = std::min({a[0][0], a[1][1], a[2][2]});
    double hi = std::max({a[0][0], a[1][1], a[2][2]});
    return {lo, hi};
}

}  // namespace detail

// Checks the standing assumptions on a loaded configuration:
//   monotone axial velocities (dv/dx >= 0 on every edge),
//   kappa0 - d_i ell_i > 0 with d_i the transverse velocity sup,
//   node flux balance sum h^2 v = 0,
//   the sign pattern of the axial components,
//   declared constancy neighborhoods (origin, base of cylinder 3),
//   interface matching v_i(eps ell0) = node constant for the eps range,
//   cut-off geometry eps*ell0 + 2*delta < ell - 2*delta,
//   ellipticity bounds of all four diffusion matrices on sample grids.
inline ValidationReport validate_assumptions(const Config& cfg, std::vector<double> eps_list = {}) {
    if (eps_list.empty()) eps_list = {0.2, 0.1, 0.05, 0.025};
    const double eps_max = *std::max_element(eps_list.begin(), eps_list.end());
    ValidationReport rep;
    const auto& sp = cfg.spec;

    for (int i = 0; i < 3; ++i) {
        const EdgeFunction& v = cfg.velocity.axial[i];
        double min_dv = 1e300, min_at = 0.0;
        const int n = 2048;
        for (int k = 0; k <= n; ++k) {
            double x = sp.ell[i] * k / n;
            double dv = v.deriv1(x);
            if (dv < min_dv) {
                min_dv = dv;
                min_at = x;
            }
        }
        std::ostringstream os;
        os << "min dv/dx = " << min_dv << " at x = " << min_at;
        rep.add("assum_1.edge" + std::to_string(i + 1), min_dv >= -1e-9, os.str());
    }

    for (int i = 0; i < 3; ++i) {
        const TransverseVelocity& t = cfg.velocity.transverse[i];
        double d_i = 0.0;
        if (t.present) {
            double sup_s = 0.0;
            for (int k = 0; k <= 1024; ++k)
                sup_s = std::max(sup_s, std::abs(t.profile.eval(sp.ell[i] * k / 1024.0)));
            double sup_c = 0.0;
            const int ng = 64;
            for (int p = 0; p <= ng; ++p)
                for (int q = 0; q <= ng; ++q) {
                    Vec2 xi{sp.h[i] * (2.0 * p / ng - 1.0), sp.h[i] * (2.0 * q / ng - 1.0)};
                    if (xi.norm() > sp.h[i]) continue;
                    sup_c = std::max(sup_c, Vec2{t.c1.eval(xi.x, xi.y), t.c2.eval(xi.x, xi.y)}.norm());
                }
            d_i = sup_s * sup_c;
        }
        double margin = cfg.diffusion.kappa0[i + 1] - d_i * sp.ell[i];
        std::ostringstream os;
        os << "kappa0 - d*ell = " << margin << " (d_" << i + 1 << " = " << d_i << ")";
        rep.add("assum_2.edge" + std::to_string(i + 1), margin > 0.0, os.str());
    }

    {
        double flux = 0.0;
        for (int i = 0; i < 3; ++i) flux += sp.h[i] * sp.h[i] * cfg.velocity.node_constants[i];
        std::ostringstream os;
        os << "sum h^2 v = " << flux;
        rep.add("cond_1", std::abs(flux) <= cfg.tol.equality, os.str());
    }

    {
        bool ok = true;
        std::ostringstream os;
        for (int i = 0; i < 3; ++i) {
            double sign = (i == 0) ? -1.0 : 1.0;
            for (int k = 0; k <= 512; ++k) {
                double val = cfg.velocity.axial[i].eval(sp.ell[i] * k / 512.0);
                if (sign * val <= 0.0) {
                    ok = false;
                    os << "edge " << i + 1 << " violates sign at x = " << sp.ell[i] * k / 512.0 << "; ";
                    break;
                }
            }
        }
        rep.add("axial_sign_pattern", ok, ok ? "v1 < 0, v2 > 0, v3 > 0 on their edges" : os.str());
    }

    for (int i = 0; i < 3; ++i) {
        auto [lo, hi] = cfg.velocity.constant_near_origin[i];
        double vc = cfg.velocity.node_constants[i];
        double dev = 0.0;
        for (int k = 0; k <= 256; ++k)
            dev = std::max(dev, std::abs(cfg.velocity.axial[i].eval(lo + (hi - lo) * k / 256.0) - vc));
        std::ostringstream os;
        os << "max |v - v_node| = " << dev << " on [" << lo << ", " << hi << "]";
        rep.add("constant_near_origin.edge" + std::to_string(i + 1), dev <= 1e-10, os.str());
        double band_end = eps_max * sp.ell0 + 2.0 * sp.delta;
        rep.add("origin_constancy_covers_band.edge" + std::to_string(i + 1), hi >= band_end,
                "interval end " + std::to_string(hi) + " vs eps*ell0 + 2*delta = " + std::to_string(band_end));
    }
    {
        auto [lo, hi] = cfg.velocity.constant_near_ell3;
        double vend = cfg.velocity.axial[2].eval(sp.ell[2]);
        double dev = 0.0;
        for (int k = 0; k <= 256; ++k)
            dev = std::max(dev, std::abs(cfg.velocity.axial[2].eval(lo + (hi - lo) * k / 256.0) - vend));
        std::ostringstream os;
        os << "max |v3 - v3(ell3)| = " << dev << " on [" << lo << ", " << hi << "]";
        rep.add("constant_near_ell3", dev <= 1e-10 && hi >= sp.ell[2] - 1e-12, os.str());
        rep.add("ell3_constancy_covers_layer_band", lo <= sp.ell[2] - 2.0 * sp.delta,
                "interval start " + std::to_string(lo) + " vs ell3 - 2*delta = " +
                    std::to_string(sp.ell[2] - 2.0 * sp.delta));
    }

    for (double eps : eps_list) {
        bool ok = true;
        std::ostringstream os;
        for (int i = 0; i < 3; ++i) {
            double match = std::abs(cfg.velocity.axial[i].eval(eps * sp.ell0) - cfg.velocity.node_constants[i]);
            if (match > 1e-10) {
                ok = false;
                os << "edge " << i + 1 << " mismatch " << match << "; ";
            }
            if (!(eps * sp.ell0 + 2.0 * sp.delta < sp.ell[i] - 2.0 * sp.delta)) {
                ok = false;
                os << "delta bands overlap on edge " << i + 1 << "; ";
            }
        }
        rep.add("interface_matching.eps=" + std::to_string(eps), ok, ok ? "v continuous at eps*ell0" : os.str());
    }

    for (int i = 0; i < 3; ++i) {
        double lo = 1e300, hi = -1e300;
        const int ng = 64;
        for (int p = 0; p <= ng; ++p)
            for (int q = 0; q <= ng; ++q) {
                Vec2 xi{sp.h[i] * (2.0 * p / ng - 1.0), sp.h[i] * (2.0 * q / ng - 1.0)};
                if (xi.norm() > sp.h[i]) continue;
                double m[2][2];
                cfg.diffusion.cross[i].eval(xi.x, xi.y, m);
                double tr = m[0][0] + m[1][1];
                double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
                lo = std::min({lo, 0.5 * (tr - disc), cfg.diffusion.axial_constants[i]});
                hi = std::max({hi, 0.5 * (tr + disc), cfg.diffusion.axial_constants[i]});
            }
        std::ostringstream os;
        os << "eigenvalues in [" << lo << ", " << hi << "]";
        rep.add("n1.edge" + std::to_string(i + 1),
                lo >= cfg.diffusion.kappa0[i + 1] - 1e-12 && hi <= cfg.diffusion.kappa1[i + 1] + 1e-12, os.str());
    }
    {
        double lo = 1e300, hi = -1e300;
        const int ng = 12;
        for (int p = 0; p <= ng; ++p)
            for (int q = 0; q <= ng; ++q)
                for (int r = 0; r <= ng; ++r) {
                    double x = sp.ell0 * (2.0 * p / ng - 1.0);
                    double y = sp.ell0 * (2.0 * q / ng - 1.0);
                    double z = sp.ell0 * (2.0 * r / ng - 1.0);
                    double m[3][3];
                    cfg.diffusion.node_matrix.eval(x, y, z, m);
                    auto [l, u] = detail::sym3_eig_range(m);
                    lo = std::min(lo, l);
                    hi = std::max(hi, u);
                }
        std::ostringstream os;
        os << "eigenvalues in [" << lo << ", " << hi << "]";
        rep.add("n1.node", lo >= cfg.diffusion.kappa0[0] - 1e-12 && hi <= cfg.diffusion.kappa1[0] + 1e-12,
                os.str());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Structured velocity evaluation
// ---------------------------------------------------------------------------

enum class Region { Node = 0, Edge1 = 1, Edge2 = 2, Edge3 = 3 };

// Transverse coordinates of x with respect to edge i (0-based), in the order
// the paper uses: edge 1 -> (x2, x3), edge 2 -> (x1, x3), edge 3 -> (x1, x2).
inline Vec2 transverse_coords(const Vec3& x, int edge) {
    switch (edge) {
        case 0: return {x[1], x[2]};
        case 1: return {x[0], x[2]};
        default: return {x[0], x[1]};
    }
}

// The structured field at a physical point: axial component unscaled,
// transverse components scaled by eps, node values from the potential
// gradient at xi = x/eps. On a node face the matching value (v_i e_i) is
// returned exactly.
inline Vec3 velocity_at(const VelocityField& vel, const JunctionSpec& spec, Region region, const Vec3& x,
                        double eps) {
    Vec3 out{};
    if (region == Region::Node) {
        for (int i = 0; i < 3; ++i) {
            if (std::abs(x[i] - eps * spec.ell0) < 1e-12 * std::max(1.0, eps * spec.ell0)) {
                out[i] = vel.node_constants[i];
                return out;
            }
        }
        for (int i = 0; i < 3; ++i)
            if (std::abs(x[i]) > eps * spec.ell0 * (1.0 + 1e-12))
                throw ValidationError("velocity_at", "point outside node region");
        if (!vel.node_velocity) throw SolverError("velocity_at: node potential has not been solved");
        return vel.node_velocity(Vec3{x[0] / eps, x[1] / eps, x[2] / eps});
    }
    const int i = static_cast<int>(region) - 1;
    const double xi_ax = x[i];
    if (xi_ax < eps * spec.ell0 - 1e-12 || xi_ax > spec.ell[i] + 1e-12)
        throw ValidationError("velocity_at", "axial coordinate outside edge " + std::to_string(i + 1));
    Vec2 xb = transverse_coords(x, i);
    if (xb.norm() > eps * spec.h[i] * (1.0 + 1e-9))
        throw ValidationError("velocity_at", "transverse point outside edge " + std::to_string(i + 1));
    if (std::abs(xi_ax - eps * spec.ell0) < 1e-12 * std::max(1.0, eps * spec.ell0)) {
        out[i] = vel.node_constants[i];
        return out;
    }
    Vec2 vbar = vel.transverse[i].eval(xi_ax, Vec2{xb.x / eps, xb.y / eps});
    out[i] = vel.axial[i].eval(xi_ax);
    switch (i) {
        case 0:
            out[1] = eps * vbar.x;
            out[2] = eps * vbar.y;
            break;
        case 1:
            out[0] = eps * vbar.x;
            out[2] = eps * vbar.y;
            break;
        default:
            out[0] = eps * vbar.x;
            out[1] = eps * vbar.y;
            break;
    }
    return out;
}

}  // namespace junction
