#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "junction/limit_graph.hpp"
#include "junction/regular_expansion.hpp"

using namespace junction;
using Catch::Approx;

namespace {

json trivial_config() {
    return json::parse(R"({
      "geometry": {"ell0": 0.3, "h": [1,1,1], "ell": [1,1,1], "q": [1,2,3], "delta": 0.1},
      "velocity": {"axial": [-2.0, 1.0, 1.0], "node_constants": [-2.0, 1.0, 1.0]},
      "diffusion": {"axial_constants": [1,1,1]},
      "sources": {"phi": [{"type":"zero"},{"type":"zero"},{"type":"zero"}]}
    })");
}

json source_config() {
    json j = trivial_config();
    j["sources"]["phi"][0] = {{"type", "bump"}, {"amplitude", 0.5}, {"support", {0.35, 0.75}}};
    return j;
}

ExpansionOptions fast_opts() {
    ExpansionOptions o;
    o.corrector_rings = 16;
    o.slices_per_support = 32;
    return o;
}

}  // namespace

TEST_CASE("constant configuration kills every higher-order term", "[regular]") {
    Config cfg = load_spec_json(trivial_config());
    Expansion exp = expand_regular(cfg, 2, fast_opts());
    for (int k = 1; k <= 2; ++k) {
        for (int j = 0; j < 3; ++j) {
            REQUIRE(exp.w_terms[static_cast<std::size_t>(k)].c[static_cast<std::size_t>(j)] ==
                    Approx(0.0).margin(1e-13));
            for (double x : {0.0, 0.4, 1.0})
                REQUIRE(exp.w(k, j).eval(x) == Approx(0.0).margin(1e-12));
            REQUIRE(exp.u(k)->edge[static_cast<std::size_t>(j)].zero);
        }
    }
}

TEST_CASE("next_w constants from a synthetic previous term", "[regular]") {
    Config cfg = load_spec_json(trivial_config());
    RegularEdgeTerm prev;
    prev.order = 0;
    // w_0^(1)(x) = 0.2 x^2 has derivative 0.4 at ell_1 = 1
    prev.w[0] = EdgeFunction::sample(1.0, [](double x) { return 0.2 * x * x; });
    prev.w[1] = EdgeFunction::sample(1.0, [](double) { return 2.0; });
    prev.w[2] = EdgeFunction::sample(1.0, [](double) { return 0.0; });
    RegularEdgeTerm next = next_w(prev, cfg);
    REQUIRE(next.c[0] == Approx(-0.4).margin(1e-12));
    REQUIRE(next.c[1] == Approx(0.0).margin(1e-12));
    REQUIRE(next.c[2] == Approx(0.4).margin(1e-12));  // -(c1 + c2) for equal radii
    // far-base values vanish exactly by the choice of c_k
    REQUIRE(next.w[0].eval(1.0) == 0.0);
    REQUIRE(next.w[1].eval(1.0) == 0.0);
}

TEST_CASE("recurrence invariants for a varying-velocity configuration", "[regular]") {
    json j = source_config();
    j["velocity"]["axial"][0] = {{"type", "smoothramp"}, {"base", -2.0}, {"slope", 0.3}, {"x0", 0.35}, {"x1", 0.75}};
    j["velocity"]["axial"][1] = {{"type", "smoothramp"}, {"base", 1.0}, {"slope", 0.3}, {"x0", 0.35}, {"x1", 0.75}};
    Config cfg = load_spec_json(j);
    Expansion exp = expand_regular(cfg, 3, fast_opts());
    for (int k = 1; k <= 3; ++k) {
        std::array<double, 3> w0{exp.w_zero(k, 0), exp.w_zero(k, 1), exp.w_zero(k, 2)};
        REQUIRE(std::abs(kirchhoff_residual(w0, cfg.spec, cfg.velocity)) <= 1e-12);
        REQUIRE(exp.w(k, 0).eval(1.0) == 0.0);
        REQUIRE(exp.w(k, 1).eval(1.0) == 0.0);
    }
    // nontrivial orders exist (the velocity varies near the far bases)
    REQUIRE(std::abs(exp.w_terms[1].c[0]) > 1e-6);
}

TEST_CASE("first corrector matches the radial closed form", "[regular]") {
    Config cfg = load_spec_json(source_config());
    ExpansionOptions opts = fast_opts();
    opts.corrector_rings = 32;
    Expansion exp = expand_regular(cfg, 1, opts);
    const CrossSectionCorrector* u1 = exp.u(1);
    REQUIRE(u1 != nullptr);
    REQUIRE_FALSE(u1->edge[0].zero);
    const double x_star = 0.55;  // inside the source support
    const double phi_x = cfg.source.phi[0].eval(x_star);
    REQUIRE(phi_x > 0.1);
    auto oracle = isotropic_oracle(1.0, 1.0, phi_x);
    for (double r : {0.0, 0.4, 0.8})
        REQUIRE(u1->interpolate(0, x_star, Vec2{r, 0.0}) == Approx(oracle(r)).epsilon(5e-3).margin(2e-4));
    // mean-zero at the slice
    auto nodal = u1->nodal(0, x_star, 0);
    REQUIRE(std::abs(mesh_mean(*u1->edge[0].mesh, nodal)) <= 1e-10 * phi_x);
    // identically zero outside the support and on source-free edges
    REQUIRE(u1->interpolate(0, 0.1, Vec2{0.3, 0.0}) == 0.0);
    REQUIRE(u1->edge[1].zero);
    REQUIRE(u1->edge[2].zero);
}

TEST_CASE("corrector axial derivatives follow the source profile", "[regular]") {
    Config cfg = load_spec_json(source_config());
    Expansion exp = expand_regular(cfg, 1, fast_opts());
    const CrossSectionCorrector* u1 = exp.u(1);
    const double x_star = 0.5;
    double u_val = u1->interpolate(0, x_star, Vec2{0.0, 0.0});
    auto d1 = corrector_x_derivative(*u1, 0, x_star, 1);
    const auto& mesh = *u1->edge[0].mesh;
    double du_val = mesh.interpolate(Vec2{0.0, 0.0}, d1);
    double phi = cfg.source.phi[0].eval(x_star);
    double dphi = cfg.source.phi[0].deriv1(x_star);
    // u_1 = phi(x) S(xi), so du/u = phi'/phi
    REQUIRE(du_val / u_val == Approx(dphi / phi).epsilon(1e-3));
    // outside the support the derivative field is identically zero
    auto dz = corrector_x_derivative(*u1, 0, 0.05, 2);
    for (double v : dz) REQUIRE(v == 0.0);
}

TEST_CASE("second x-derivative is constant for a quadratic source density", "[regular]") {
    json j = trivial_config();
    // density (x-0.3)(0.7-x): second derivative of u_1 in x is -2 S(xi)
    j["sources"]["phi"][0] = {{"type", "polynomial"}, {"coeffs", {-0.21, 1.0, -1.0}}, {"support", {0.3, 0.7}}};
    Config cfg = load_spec_json(j);
    Expansion exp = expand_regular(cfg, 1, fast_opts());
    const CrossSectionCorrector* u1 = exp.u(1);
    auto dxx_a = corrector_x_derivative(*u1, 0, 0.45, 2);
    auto dxx_b = corrector_x_derivative(*u1, 0, 0.55, 2);
    const auto& mesh = *u1->edge[0].mesh;
    double a0 = mesh.interpolate(Vec2{0.2, 0.1}, dxx_a);
    double b0 = mesh.interpolate(Vec2{0.2, 0.1}, dxx_b);
    REQUIRE(a0 == Approx(b0).epsilon(1e-4));
    REQUIRE(std::abs(a0) > 1e-4);  // nonzero field
}

TEST_CASE("expansion is linear in the data", "[regular]") {
    json j1 = source_config();
    json j2 = j1;
    j2["sources"]["phi"][0]["amplitude"] = 1.0;
    j2["geometry"]["q"] = {2.0, 4.0, 6.0};
    Config c1 = load_spec_json(j1);
    Config c2 = load_spec_json(j2);
    Expansion e1 = expand_regular(c1, 2, fast_opts());
    Expansion e2 = expand_regular(c2, 2, fast_opts());
    for (int k = 0; k <= 2; ++k)
        for (int jj = 0; jj < 3; ++jj)
            for (double x : {0.2, 0.5, 0.9})
                REQUIRE(e2.w(k, jj).eval(x) == Approx(2.0 * e1.w(k, jj).eval(x)).margin(1e-9));
    REQUIRE(e2.u(2)->interpolate(0, 0.5, Vec2{0.3, 0.2}) ==
            Approx(2.0 * e1.u(2)->interpolate(0, 0.5, Vec2{0.3, 0.2})).margin(1e-9));
}
