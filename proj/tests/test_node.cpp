#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "junction/limit_graph.hpp"
#include "junction/node_solver.hpp"

using namespace junction;
using Catch::Approx;

namespace {

Config node_config() {
    return load_spec_json(json::parse(R"({
      "geometry": {"ell0": 0.3, "h": [0.2,0.2,0.2], "ell": [1,1,1], "q": [1,2,3], "delta": 0.1},
      "velocity": {"axial": [-2.0, 1.0, 1.0], "node_constants": [-2.0, 1.0, 1.0]},
      "diffusion": {"axial_constants": [1,1,1]},
      "sources": {"phi": [{"type":"zero"},{"type":"zero"},{"type":"zero"}]}
    })"));
}

std::shared_ptr<NodeDomain> make_domain(double L = 8.0, int res = 8) {
    return std::make_shared<NodeDomain>(0.3, std::array<double, 3>{0.2, 0.2, 0.2}, L, res);
}

}  // namespace

TEST_CASE("node domain rejects oversized outlets", "[node]") {
    REQUIRE_THROWS_AS(NodeDomain(0.3, {1.0, 1.0, 1.0}, 8.0, 8), ValidationError);
}

TEST_CASE("zero node constants give the zero potential", "[node]") {
    auto dom = make_domain(4.0, 6);
    NodePotential pot = solve_node_potential(dom, {0.0, 0.0, 0.0});
    for (double v : pot.p) REQUIRE(v == Approx(0.0).margin(1e-12));
}

TEST_CASE("potential of the worked configuration", "[node]") {
    auto dom = make_domain(4.0, 8);
    NodePotential pot = solve_node_potential(dom, {-2.0, 1.0, 1.0});
    REQUIRE(std::abs(pot.boundary_flux_total) <= 1e-10);
    double mean = 0.0;
    for (double v : pot.p) mean += v;
    REQUIRE(std::abs(mean / pot.p.size()) <= 1e-12);
    // imposed disk fluxes agree with the node constants (equal radii: exact)
    REQUIRE(pot.imposed_flux[0] == Approx(-2.0).margin(1e-12));
    REQUIRE(pot.imposed_flux[1] == Approx(1.0).margin(1e-12));
}

TEST_CASE("incompatible node fluxes are rejected", "[node]") {
    auto dom = make_domain(4.0, 6);
    REQUIRE_THROWS_WITH(solve_node_potential(dom, {-2.0, 1.0, 2.0}),
                        Catch::Matchers::ContainsSubstring("Neumann compatibility violated"));
}

TEST_CASE("node source structure and solvability quadrature", "[node]") {
    Config cfg = node_config();
    auto f1 = node_source(0, {1.0, 2.0, 0.0}, cfg.diffusion, cfg.velocity.node_constants, cfg.spec.ell0);
    // support inside [1 + ell0, 2 + ell0]
    REQUIRE(f1(1.25) == 0.0);
    REQUIRE(f1(2.35) == 0.0);
    REQUIRE(std::abs(f1(1.8)) > 0.0);
    // int f_j = -pi h^2 v_j w_j, checked through the solvability functional
    double s0 = check_node_solvability({1.0, 2.0, 0.0}, cfg.spec, cfg.diffusion, cfg.velocity.node_constants);
    REQUIRE(s0 == Approx(0.0).margin(1e-10));
    double s1 = check_node_solvability({1.0, 0.0, 0.0}, cfg.spec, cfg.diffusion, cfg.velocity.node_constants);
    REQUIRE(s1 == Approx(-M_PI * 0.04 * (-2.0)).margin(1e-10));
    double s2 = check_node_solvability({1.0, 1.0, 1.0}, cfg.spec, cfg.diffusion, cfg.velocity.node_constants);
    REQUIRE(s2 == Approx(0.0).margin(1e-10));
}

TEST_CASE("zero far-field constants give the zero inner term", "[node]") {
    Config cfg = node_config();
    auto dom = make_domain(4.0, 6);
    auto pot = std::make_shared<NodePotential>(solve_node_potential(dom, cfg.velocity.node_constants));
    NodeTerm term = solve_node_term(dom, pot, cfg, 1, {0.0, 0.0, 0.0});
    for (double v : term.tilde) REQUIRE(v == 0.0);
    for (double v : term.n_cells) REQUIRE(v == 0.0);
}

TEST_CASE("solvability violation is rejected before solving", "[node]") {
    Config cfg = node_config();
    auto dom = make_domain(4.0, 6);
    auto pot = std::make_shared<NodePotential>(solve_node_potential(dom, cfg.velocity.node_constants));
    REQUIRE_THROWS_WITH(solve_node_term(dom, pot, cfg, 0, {1.0, 0.0, 0.0}),
                        Catch::Matchers::ContainsSubstring("solvability"));
}

TEST_CASE("worked inner term stabilizes to (1, 2, 0)", "[node]") {
    Config cfg = node_config();
    auto dom = make_domain(8.0, 8);
    auto pot = std::make_shared<NodePotential>(solve_node_potential(dom, cfg.velocity.node_constants));
    NodeTerm term = solve_node_term(dom, pot, cfg, 0, {1.0, 2.0, 0.0});
    REQUIRE(std::abs(term.solvability_residual) <= 1e-10);
    REQUIRE(term.cap_mismatch <= 1e-6 * 2.0);
    const std::array<double, 3> target{1.0, 2.0, 0.0};
    for (int o = 0; o < 3; ++o) {
        const auto& prof = term.profiles[static_cast<std::size_t>(o)];
        REQUIRE(prof.avg.back() == Approx(target[static_cast<std::size_t>(o)]).margin(2e-6));
        double rate = fit_decay_rate(term, o);
        REQUIRE(rate > 0.0);
    }
    // inflow outlet decays at roughly v/a = 2
    REQUIRE(fit_decay_rate(term, 0) == Approx(2.0).epsilon(0.15));
    // reconstruction at a mid-outlet point
    REQUIRE(term.value(Vec3{4.0, 0.0, 0.0}) == Approx(1.0).margin(1e-3));
}

TEST_CASE("discrete conservation along the source-free tail", "[node]") {
    Config cfg = node_config();
    auto dom = make_domain(8.0, 8);
    auto pot = std::make_shared<NodePotential>(solve_node_potential(dom, cfg.velocity.node_constants));
    NodeTerm term = solve_node_term(dom, pot, cfg, 0, {1.0, 2.0, 0.0});
    // beyond the reconstruction band the flux of Ntilde is constant
    int a_start = static_cast<int>((2.4 - 0.3) / dom->dx());
    int a_end = dom->n_axial() - 4;
    double f0 = term.axial_flux(0, a_start);
    for (int a = a_start; a < a_end; a += 8) REQUIRE(term.axial_flux(0, a) == Approx(f0).margin(1e-7));
    for (int o : {1, 2}) {
        double g0 = term.axial_flux(o, a_start);
        for (int a = a_start; a < a_end; a += 8) REQUIRE(term.axial_flux(o, a) == Approx(g0).margin(1e-6));
    }
}

TEST_CASE("doubling the truncation leaves retained values unchanged", "[node]") {
    Config cfg = node_config();
    auto dom8 = make_domain(8.0, 8);
    auto dom16 = make_domain(16.0, 8);
    auto pot8 = std::make_shared<NodePotential>(solve_node_potential(dom8, cfg.velocity.node_constants));
    auto pot16 = std::make_shared<NodePotential>(solve_node_potential(dom16, cfg.velocity.node_constants));
    NodeTerm t8 = solve_node_term(dom8, pot8, cfg, 0, {1.0, 2.0, 0.0});
    NodeTerm t16 = solve_node_term(dom16, pot16, cfg, 0, {1.0, 2.0, 0.0});
    for (int o = 0; o < 3; ++o) {
        const auto& p8 = t8.profiles[static_cast<std::size_t>(o)];
        const auto& p16 = t16.profiles[static_cast<std::size_t>(o)];
        double max_diff = 0.0;
        for (std::size_t i = 0; i < p8.xi.size(); ++i)
            max_diff = std::max(max_diff, std::abs(p8.avg[i] - p16.avg[i]));
        REQUIRE(max_diff <= 1e-6 * 2.0);
    }
}

TEST_CASE("fitted decay rate is stable under mesh refinement", "[node]") {
    Config cfg = node_config();
    auto solve_rate = [&](int res) {
        auto dom = make_domain(8.0, res);
        auto pot = std::make_shared<NodePotential>(solve_node_potential(dom, cfg.velocity.node_constants));
        NodeTerm term = solve_node_term(dom, pot, cfg, 0, {1.0, 2.0, 0.0});
        return fit_decay_rate(term, 0);
    };
    double r6 = solve_rate(6), r12 = solve_rate(12);
    REQUIRE(std::abs(r12 - r6) / r12 < 0.10);
}

TEST_CASE("node solves are deterministic", "[node]") {
    Config cfg = node_config();
    auto dom = make_domain(4.0, 6);
    auto pot = std::make_shared<NodePotential>(solve_node_potential(dom, cfg.velocity.node_constants));
    NodeTerm a = solve_node_term(dom, pot, cfg, 0, {1.0, 2.0, 0.0});
    NodeTerm b = solve_node_term(dom, pot, cfg, 0, {1.0, 2.0, 0.0});
    for (std::size_t i = 0; i < a.tilde.size(); i += 97) REQUIRE(a.tilde[i] == b.tilde[i]);
}

TEST_CASE("node velocity evaluation through the potential", "[node]") {
    Config cfg = node_config();
    auto dom = make_domain(4.0, 8);
    auto pot = std::make_shared<NodePotential>(solve_node_potential(dom, cfg.velocity.node_constants));
    auto pp = pot;
    cfg.velocity.node_velocity = [pp](const Vec3& xi) { return pp->velocity(xi); };
    const double eps = 0.1;
    // face matching value (exact by the interface convention)
    Vec3 v_face = velocity_at(cfg.velocity, cfg.spec, Region::Node, Vec3{eps * 0.3, 0.0, 0.0}, eps);
    REQUIRE(v_face[0] == -2.0);
    REQUIRE(v_face[1] == 0.0);
    // interior gradient is finite and flows toward outlet 1 reversed
    Vec3 v_in = velocity_at(cfg.velocity, cfg.spec, Region::Node, Vec3{0.02, 0.0, 0.0}, eps);
    REQUIRE(std::abs(v_in[0]) < 10.0);
}

TEST_CASE("constant inner term hits the below-noise-floor sentinel", "[node]") {
    Config cfg = node_config();
    auto dom = make_domain(4.0, 6);
    auto pot = std::make_shared<NodePotential>(solve_node_potential(dom, cfg.velocity.node_constants));
    NodeTerm term = solve_node_term(dom, pot, cfg, 2, {0.0, 0.0, 0.0});
    for (int o = 0; o < 3; ++o) REQUIRE(std::isinf(fit_decay_rate(term, o)));
}

TEST_CASE("unequal radii: flux balancing and stabilization", "[node]") {
    // h = (0.25, 0.2, 0.15) with v1 = -(h2^2 + h3^2)/h1^2 = -1 exactly
    json j = json::parse(R"({
      "geometry": {"ell0": 0.3, "h": [0.25,0.2,0.15], "ell": [1,1,1], "q": [1,2,3], "delta": 0.1},
      "velocity": {"axial": [-1.0, 1.0, 1.0], "node_constants": [-1.0, 1.0, 1.0]},
      "diffusion": {"axial_constants": [1,1,1]},
      "sources": {"phi": [{"type":"zero"},{"type":"zero"},{"type":"zero"}]}
    })");
    Config cfg = load_spec_json(j);
    LimitSolution limit = solve_limit(cfg);
    std::array<double, 3> w0 = limit.w0_at_zero();
    REQUIRE(std::abs(kirchhoff_residual(w0, cfg.spec, cfg.velocity)) <= 1e-12);

    auto dom = std::make_shared<NodeDomain>(0.3, cfg.spec.h, 6.0, 8);
    auto pot = std::make_shared<NodePotential>(solve_node_potential(dom, cfg.velocity.node_constants));
    // balancing correction is small and shared across outlets
    for (int o = 0; o < 3; ++o)
        REQUIRE(std::abs(pot.get()->imposed_flux[static_cast<std::size_t>(o)] -
                         cfg.velocity.node_constants[static_cast<std::size_t>(o)]) < 0.05);
    REQUIRE(std::abs(pot->boundary_flux_total) <= 1e-10);

    NodeTerm term = solve_node_term(dom, pot, cfg, 0, w0);
    for (int o = 0; o < 3; ++o) {
        INFO("outlet " << o + 1 << " target " << w0[static_cast<std::size_t>(o)] << " got "
                       << term.profiles[static_cast<std::size_t>(o)].avg.back());
        REQUIRE(term.profiles[static_cast<std::size_t>(o)].avg.back() ==
                Approx(w0[static_cast<std::size_t>(o)]).margin(5e-3));
    }
}

TEST_CASE("inner-term flux balance through the node", "[node]") {
    // far from the node the full inner term carries flux v_j w_j pi h^2 per outlet
    Config cfg = node_config();
    auto dom = make_domain(8.0, 8);
    auto pot = std::make_shared<NodePotential>(solve_node_potential(dom, cfg.velocity.node_constants));
    NodeTerm term = solve_node_term(dom, pot, cfg, 0, {1.0, 2.0, 0.0});
    const double A = dom->dx() * dom->dx();
    int a_probe = static_cast<int>((5.0 - 0.3) / dom->dx());
    for (int o = 0; o < 3; ++o) {
        const double v = pot->imposed_flux[static_cast<std::size_t>(o)];
        const double a_ax = cfg.diffusion.axial_constants[static_cast<std::size_t>(o)];
        double flux = 0.0;
        for (int dcl = 0; dcl < dom->disk_cell_count(o); ++dcl) {
            double uP = term.n_cells[static_cast<std::size_t>(dom->outlet_cell(o, a_probe, dcl))];
            double uN = term.n_cells[static_cast<std::size_t>(dom->outlet_cell(o, a_probe + 1, dcl))];
            flux += A * (-a_ax * (uN - uP) / dom->dx() + std::max(v, 0.0) * uP + std::min(v, 0.0) * uN);
        }
        double expected = v * term.w_zero[static_cast<std::size_t>(o)] * dom->disk_area(o);
        INFO("outlet " << o + 1 << " flux " << flux << " expected " << expected);
        REQUIRE(flux == Approx(expected).margin(5e-3 * std::max(1.0, std::abs(expected))));
    }
}
