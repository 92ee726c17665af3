#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "junction/limit_graph.hpp"
#include "junction/numerics.hpp"

using namespace junction;
using Catch::Approx;

namespace {

json constant_config() {
    return json::parse(R"({
      "geometry": {"ell0": 0.3, "h": [1,1,1], "ell": [1,1,1], "q": [1,2,3], "delta": 0.1},
      "velocity": {"axial": [-2.0, 1.0, 1.0], "node_constants": [-2.0, 1.0, 1.0]},
      "diffusion": {"axial_constants": [1,1,1]},
      "sources": {"phi": [{"type":"zero"},{"type":"zero"},{"type":"zero"}]}
    })");
}

}  // namespace

TEST_CASE("limit solution of the constant worked configuration", "[limit]") {
    Config cfg = load_spec_json(constant_config());
    LimitSolution sol = solve_limit(cfg);
    // hand evaluation of the quadrature formula: C_j = -h v q / 2, C_3 = -(C_1 + C_2)
    REQUIRE(sol.C[0] == Approx(1.0).margin(1e-14));
    REQUIRE(sol.C[1] == Approx(-1.0).margin(1e-14));
    REQUIRE(sol.C[2] == Approx(0.0).margin(1e-14));
    for (double x : {0.0, 0.25, 0.7, 1.0}) {
        REQUIRE(sol.w0[0].eval(x) == Approx(1.0).margin(1e-13));
        REQUIRE(sol.w0[1].eval(x) == Approx(2.0).margin(1e-13));
        REQUIRE(sol.w0[2].eval(x) == Approx(0.0).margin(1e-13));
    }
    REQUIRE(kirchhoff_residual(sol.w0_at_zero(), cfg.spec, cfg.velocity) == Approx(0.0).margin(1e-12));
}

TEST_CASE("polynomial source with unit-tenth mass shifts C_1", "[limit]") {
    json j = constant_config();
    j["sources"]["phi"][0] = {{"type", "polynomial"}, {"coeffs", {0.2}}, {"support", {0.25, 0.75}}};
    Config cfg = load_spec_json(j);
    // exact antiderivative path and an independent quadrature of the spline
    REQUIRE(cfg.source.phi[0].integral(1.0) == Approx(0.1).margin(1e-15));
    double mass = integrate_gauss([&](double x) { return cfg.source.phi[0].eval(x); }, 0.0, 1.0, 64, 8);
    REQUIRE(mass == Approx(0.1).margin(1e-3));  // spline rings at the density jumps
    LimitSolution sol = solve_limit(cfg);
    REQUIRE(sol.C[0] == Approx(0.9).margin(1e-14));
    REQUIRE(sol.w0[0].eval(0.0) == Approx(0.9).margin(1e-13));
    REQUIRE(sol.w0[0].eval(1.0) == Approx(1.0).margin(1e-12));  // Dirichlet reproduced
    // pointwise match with the hand-integrated formula at the sample grid
    for (double x : {0.1, 0.3, 0.5, 0.62, 0.9}) {
        double integral = 0.2 * (std::min(x, 0.75) > 0.25 ? std::min(x, 0.75) - 0.25 : 0.0);
        double hand = -2.0 / (1.0 * -2.0) * (integral + 0.9);
        REQUIRE(sol.w0[0].eval(x) == Approx(hand).margin(1e-12));
    }
}

TEST_CASE("kirchhoff residual evaluations", "[limit]") {
    Config cfg = load_spec_json(constant_config());
    REQUIRE(kirchhoff_residual({1.0, 2.0, 0.0}, cfg.spec, cfg.velocity) == Approx(0.0).margin(1e-15));
    REQUIRE(kirchhoff_residual({1.0, 1.0, 1.0}, cfg.spec, cfg.velocity) == Approx(0.0).margin(1e-15));
    REQUIRE(kirchhoff_residual({0.0, 0.0, 0.0}, cfg.spec, cfg.velocity) == 0.0);
    REQUIRE(kirchhoff_residual({1.0, 0.0, 0.0}, cfg.spec, cfg.velocity) == Approx(-2.0).margin(1e-15));
}

TEST_CASE("the vertex identity h1 C1 + h2 C2 + h3 C3 vanishes identically", "[limit]") {
    json j = constant_config();
    j["sources"]["phi"][1] = {{"type", "bump"}, {"amplitude", 0.5}, {"support", {0.3, 0.8}}};
    j["geometry"]["h"] = {0.5, 0.8, 0.64030373707398};  // keeps sum h^2 v near zero
    j["velocity"]["axial"] = {-2.3124, 1.0, 1.0};
    j["velocity"]["node_constants"] = {-2.3124, 1.0, 1.0};
    // rebalance exactly: v1 = (h2^2 + h3^2)/h1^2 * (-1)
    double h2 = 0.8, h3 = 0.64030373707398, h1 = 0.5;
    double v1 = -(h2 * h2 + h3 * h3) / (h1 * h1);
    j["velocity"]["axial"][0] = v1;
    j["velocity"]["node_constants"][0] = v1;
    Config cfg = load_spec_json(j);
    LimitSolution sol = solve_limit(cfg);
    REQUIRE(cfg.spec.h[0] * sol.C[0] + cfg.spec.h[1] * sol.C[1] + cfg.spec.h[2] * sol.C[2] ==
            Approx(0.0).margin(1e-14));
    REQUIRE(kirchhoff_residual(sol.w0_at_zero(), cfg.spec, cfg.velocity) == Approx(0.0).margin(1e-12));
}

TEST_CASE("limit equation holds pointwise on the grid", "[limit]") {
    json j = constant_config();
    j["sources"]["phi"][2] = {{"type", "bump"}, {"amplitude", 0.4}, {"support", {0.3, 0.7}}};
    j["velocity"]["axial"][2] = {{"type", "smoothramp"}, {"base", 1.0}, {"slope", 0.2}, {"x0", 0.35}, {"x1", 0.8}};
    Config cfg = load_spec_json(j);
    LimitSolution sol = solve_limit(cfg);
    const auto& w = sol.w0[2];
    const auto& v = cfg.velocity.axial[2];
    for (int i = 1; i < 64; ++i) {
        double x = i / 64.0;
        double lhs = -(v.deriv1(x) * w.eval(x) + v.eval(x) * w.deriv1(x));  // h = 1
        REQUIRE(lhs == Approx(2.0 * cfg.source.phi[2].eval(x)).margin(1e-4));
    }
}

TEST_CASE("quadrature grid refinement converges at spline order", "[limit]") {
    auto solve_with = [&](std::size_t grid) {
        json j = constant_config();
        j["grid_per_unit"] = grid;
        j["sources"]["phi"][0] = {{"type", "bump"}, {"amplitude", 0.7}, {"support", {0.2, 0.9}}};
        Config cfg = load_spec_json(j);
        return solve_limit(cfg).w0[0].eval(0.0);
    };
    double w256 = solve_with(256), w512 = solve_with(512), w1024 = solve_with(1024);
    double e_coarse = std::abs(w256 - w1024);
    double e_fine = std::abs(w512 - w1024);
    REQUIRE(e_coarse / std::max(e_fine, 1e-300) > 8.0);
}

TEST_CASE("vanishing axial velocity is a structured error", "[limit]") {
    json j = constant_config();
    j["velocity"]["axial"][1] = {{"type", "smoothstep"}, {"from", 1.0}, {"to", -0.5}, {"x0", 0.4}, {"x1", 0.8}};
    j["velocity"]["node_constants"] = {-2.0, 1.0, 1.0};
    Config cfg = load_spec_json(j);
    REQUIRE_THROWS_AS(solve_limit(cfg), SolverError);
}
