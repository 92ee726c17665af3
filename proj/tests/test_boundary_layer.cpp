#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "junction/boundary_layer.hpp"

using namespace junction;
using Catch::Approx;

namespace {

Config worked_config(std::array<double, 3> q = {1.0, 2.0, 3.0}) {
    json j = json::parse(R"({
      "geometry": {"ell0": 0.3, "h": [1,1,1], "ell": [1,1,1], "q": [1,2,3], "delta": 0.1},
      "velocity": {"axial": [-2.0, 1.0, 1.0], "node_constants": [-2.0, 1.0, 1.0]},
      "diffusion": {"axial_constants": [1,1,1]},
      "sources": {"phi": [{"type":"zero"},{"type":"zero"},{"type":"zero"}]}
    })");
    j["geometry"]["q"] = q;
    return load_spec_json(j);
}

}  // namespace

TEST_CASE("layer amplitudes of the worked configuration", "[boundary_layer]") {
    Config cfg = worked_config();
    Expansion exp = expand_regular(cfg, 2);
    auto layers = build_layer_terms(exp, cfg);
    REQUIRE(layers.size() == 3);
    REQUIRE(layers[0].amplitude == Approx(3.0).margin(1e-12));  // q_3 - w_0(ell_3) = 3 - 0
    REQUIRE(layers[0].decay_rate == Approx(1.0).margin(1e-13));
    REQUIRE(layers[1].amplitude == Approx(0.0).margin(1e-12));
    REQUIRE(layers[2].amplitude == Approx(0.0).margin(1e-12));
}

TEST_CASE("layer vanishes when the limit solution already matches q3", "[boundary_layer]") {
    // equal Dirichlet data: w_0^(3)(ell_3) = q_3 exactly
    Config cfg = worked_config({1.0, 1.0, 1.0});
    Expansion exp = expand_regular(cfg, 0);
    auto layers = build_layer_terms(exp, cfg);
    REQUIRE(exp.w(0, 2).eval(1.0) == Approx(1.0).margin(1e-12));
    REQUIRE(layers[0].amplitude == Approx(0.0).margin(1e-12));
}

TEST_CASE("layer evaluation", "[boundary_layer]") {
    BoundaryLayerTerm t;
    t.amplitude = 3.0;
    t.decay_rate = 1.0;
    REQUIRE(eval_layer(t, std::log(2.0)) == Approx(1.5).margin(1e-14));
    REQUIRE(eval_layer(t, 0.0) == 3.0);
    REQUIRE(eval_layer(t, 40.0) <= 3.0 * std::exp(-40.0) * (1.0 + 1e-12));
    REQUIRE_THROWS_AS(eval_layer(t, -0.1), std::invalid_argument);
}

TEST_CASE("layer satisfies its ODE", "[boundary_layer]") {
    Config cfg = worked_config();
    Expansion exp = expand_regular(cfg, 0);
    auto layers = build_layer_terms(exp, cfg);
    const auto& t = layers[0];
    const double a = cfg.diffusion.axial_constants[2];
    const double v = cfg.velocity.axial[2].eval(1.0);
    // analytic plug-in: -a rate^2 + v rate = rate (v - a rate) = 0
    REQUIRE(v - a * t.decay_rate == Approx(0.0).margin(1e-15));
    // and by central differences on the profile
    for (double xi : {0.5, 2.0}) {
        double h = 1e-5;
        double d2 = (eval_layer(t, xi + h) - 2.0 * eval_layer(t, xi) + eval_layer(t, xi - h)) / (h * h);
        double d1 = (eval_layer(t, xi + h) - eval_layer(t, xi - h)) / (2.0 * h);
        REQUIRE(-a * d2 - v * d1 == Approx(0.0).margin(1e-5));
    }
    // monotone decay to zero
    REQUIRE(eval_layer(t, 1.0) > eval_layer(t, 2.0));
}
