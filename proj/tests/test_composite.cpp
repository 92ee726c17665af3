#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "junction/pipeline.hpp"

using namespace junction;
using Catch::Approx;

namespace {

json worked_json() {
    return json::parse(R"({
      "geometry": {"ell0": 0.3, "h": [0.2,0.2,0.2], "ell": [1,1,1], "q": [1,2,3], "delta": 0.1},
      "velocity": {"axial": [-2.0, 1.0, 1.0], "node_constants": [-2.0, 1.0, 1.0]},
      "diffusion": {"axial_constants": [1,1,1]},
      "sources": {"phi": [{"type":"zero"},{"type":"zero"},{"type":"zero"}]}
    })");
}

PipelineState worked_state(int order = 1, int res = 8) {
    PipelineOptions opts;
    opts.order = order;
    opts.resolution = res;
    return prepare_state(load_spec_json(worked_json()), opts);
}

}  // namespace

TEST_CASE("composite reproduces the regional values", "[composite]") {
    PipelineState st = worked_state(0);
    CompositeApproximation approx = make_composite(st, 0, 0.1);

    // deep inside edge 2 all cut-offs are settled
    REQUIRE(approx.evaluate(Vec3{0.0, 0.5, 0.01}) == Approx(2.0).margin(1e-12));
    // at the base of edge 3 the layer restores the Dirichlet datum
    REQUIRE(approx.evaluate(Vec3{0.0, 0.0, 1.0}) == Approx(3.0).margin(1e-12));
    // inside the node the value is the inner term
    Vec3 x{0.01, 0.005, -0.01};
    Vec3 xi{x[0] / 0.1, x[1] / 0.1, x[2] / 0.1};
    REQUIRE(approx.evaluate(x) == Approx(st.node_terms[0]->value(xi)).margin(1e-13));
    // outside the junction
    REQUIRE_THROWS_AS(approx.evaluate(Vec3{0.5, 0.5, 0.5}), ValidationError);
}

TEST_CASE("Dirichlet data are reproduced at all three bases", "[composite]") {
    PipelineState st = worked_state(1);
    for (double eps : {0.2, 0.05}) {
        CompositeApproximation approx = make_composite(st, 1, eps);
        REQUIRE(approx.evaluate(Vec3{1.0, 0.0, 0.0}) == Approx(1.0).margin(1e-12));
        REQUIRE(approx.evaluate(Vec3{0.0, 1.0, 0.0}) == Approx(2.0).margin(1e-12));
        REQUIRE(approx.evaluate(Vec3{0.0, 0.0, 1.0}) == Approx(3.0).margin(1e-12));
        // also slightly off-axis on the base disks
        REQUIRE(approx.evaluate(Vec3{1.0, 0.5 * eps * 0.2, 0.0}) == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("blend is continuous across the cut-off band edges", "[composite]") {
    PipelineState st = worked_state(0);
    CompositeApproximation approx = make_composite(st, 0, 0.1);
    for (double x2 : {0.1 * 0.3 + 0.1, 0.1 * 0.3 + 0.2}) {
        double below = approx.evaluate(Vec3{0.0, x2 - 1e-9, 0.0});
        double above = approx.evaluate(Vec3{0.0, x2 + 1e-9, 0.0});
        REQUIRE(below == Approx(above).margin(1e-6));
    }
}

TEST_CASE("composite is linear in the data", "[composite]") {
    PipelineState st1 = worked_state(0);
    json doubled = worked_json();
    doubled["geometry"]["q"] = {2.0, 4.0, 6.0};
    PipelineOptions opts;
    opts.order = 0;
    opts.resolution = 8;
    PipelineState st2 = prepare_state(load_spec_json(doubled), opts);
    CompositeApproximation a1 = make_composite(st1, 0, 0.1);
    CompositeApproximation a2 = make_composite(st2, 0, 0.1);
    for (Vec3 x : {Vec3{0.5, 0.0, 0.01}, Vec3{0.05, 0.01, 0.0}, Vec3{0.0, 0.01, 0.95}})
        REQUIRE(a2.evaluate(x) == Approx(2.0 * a1.evaluate(x)).margin(1e-6));
}

TEST_CASE("cross-section averages preserve w and annihilate correctors", "[composite]") {
    PipelineState st = worked_state(0);
    CompositeApproximation approx = make_composite(st, 0, 0.1);
    // average of w_0 = 2 on edge 2
    REQUIRE(approx.cross_section_average(1, 0.6) == Approx(2.0).margin(1e-10));
    // average of the layer at the base equals its amplitude plus w_0
    REQUIRE(approx.cross_section_average(2, 1.0) == Approx(3.0).margin(1e-10));
}

TEST_CASE("deep in edge 3 the composite equals the limit value for any eps", "[composite]") {
    PipelineState st = worked_state(0);
    for (double eps : {0.1, 0.05}) {
        CompositeApproximation approx = make_composite(st, 0, eps);
        REQUIRE(approx.evaluate(Vec3{0.0, 0.0, 0.5}) == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("delta band overlap is rejected", "[composite]") {
    PipelineState st = worked_state(0);
    REQUIRE_THROWS_AS(make_composite(st, 0, 2.5), ValidationError);
}

TEST_CASE("cross-section average annihilates correctors", "[composite]") {
    json j = worked_json();
    j["sources"]["phi"][1] = {{"type", "bump"}, {"amplitude", 0.5}, {"support", {0.4, 0.7}}};
    PipelineOptions opts;
    opts.order = 1;
    opts.resolution = 6;
    PipelineState st = prepare_state(load_spec_json(j), opts);
    const double eps = 0.1;
    CompositeApproximation approx = make_composite(st, 1, eps);
    const double x = 0.55;  // inside the source support, all cut-offs settled
    double u1_center = st.expansion.u(1)->interpolate(1, x, Vec2{0.0, 0.0});
    REQUIRE(std::abs(u1_center) > 1e-3);  // the corrector is alive here
    double avg = approx.cross_section_average(1, x);
    double w_part = st.expansion.w(0, 1).eval(x) + eps * st.expansion.w(1, 1).eval(x);
    REQUIRE(avg == Approx(w_part).margin(2e-4 * eps));
}
