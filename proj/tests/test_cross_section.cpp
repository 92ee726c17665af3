#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "junction/cross_section.hpp"
#include "junction/disk_mesh.hpp"

using namespace junction;
using Catch::Approx;

TEST_CASE("disk mesh geometry", "[cross_section]") {
    DiskMesh mesh = make_disk_mesh(0.7, 12);
    REQUIRE(mesh.n_triangles() == 6 * 12 * 12);
    REQUIRE(mesh.total_area() == Approx(M_PI * 0.49).epsilon(5e-3));
    for (const auto& e : mesh.boundary_edges) {
        REQUIRE(mesh.vertices[static_cast<std::size_t>(e[0])].norm() == Approx(0.7).margin(1e-12));
    }
    // every point locates
    for (double r : {0.0, 0.2, 0.65})
        for (double th : {0.1, 2.0, 4.0}) {
            Vec2 p{r * std::cos(th), r * std::sin(th)};
            auto [tri, lam] = mesh.locate(p);
            REQUIRE(tri >= 0);
            REQUIRE(lam[0] + lam[1] + lam[2] == Approx(1.0).margin(1e-12));
        }
}

TEST_CASE("isotropic oracle values", "[cross_section]") {
    REQUIRE(isotropic_oracle(1.0, 1.0, 0.0)(0.3) == 0.0);
    auto u = isotropic_oracle(1.0, 1.0, 0.5);
    REQUIRE(u(0.0) == Approx(0.125).margin(1e-15));
    REQUIRE(u(1.0) == Approx(-0.125).margin(1e-15));
    // mean zero: int u(r) 2 pi r dr = 0
    double mean = integrate_gauss([&](double r) { return u(r) * 2.0 * M_PI * r; }, 0.0, 1.0, 16, 8);
    REQUIRE(mean == Approx(0.0).margin(1e-12));
    // boundary flux -a u'(h) = phi for h = 2
    auto u2 = isotropic_oracle(2.0, 1.0, 1.0);
    double du = (u2(2.0) - u2(2.0 - 1e-7)) / 1e-7;
    REQUIRE(-du == Approx(1.0).margin(1e-5));
}

TEST_CASE("zero data gives the zero solution", "[cross_section]") {
    DiskMesh mesh = make_disk_mesh(1.0, 10);
    auto sol = solve_neumann_mean_zero(mesh, MatrixField2::isotropic(1.0), [](const Vec2&) { return 0.0; },
                                       [](const Vec2&) { return 0.0; });
    for (double v : sol.values) REQUIRE(v == Approx(0.0).margin(1e-12));
}

TEST_CASE("solver reproduces the isotropic oracle", "[cross_section]") {
    DiskMesh mesh = make_disk_mesh(1.0, 40);  // 9600 triangles
    REQUIRE(mesh.n_triangles() == 9600);
    auto sol = solve_neumann_mean_zero(mesh, MatrixField2::isotropic(1.0), [](const Vec2&) { return 2.0; },
                                       [](const Vec2&) { return 1.0; });
    auto oracle = isotropic_oracle(1.0, 1.0, 1.0);
    double err = mesh_l2_error(mesh, sol.values, [&](const Vec2& p) { return oracle(p.norm()); });
    double nrm = std::sqrt(integrate_disk_exact([&](const Vec2& p) { return sqr(oracle(p.norm())); }, 1.0));
    REQUIRE(err / nrm < 1e-3);
    REQUIRE(std::abs(sol.mean) <= 1e-10);
    REQUIRE(sol.solver_residual <= 1e-9);
}

TEST_CASE("second order mesh convergence against the oracle", "[cross_section]") {
    auto oracle = isotropic_oracle(1.0, 1.0, 1.0);
    auto err_at = [&](int rings) {
        DiskMesh mesh = make_disk_mesh(1.0, rings);
        auto sol = solve_neumann_mean_zero(mesh, MatrixField2::isotropic(1.0),
                                           [](const Vec2&) { return 2.0; }, [](const Vec2&) { return 1.0; });
        return mesh_l2_error(mesh, sol.values, [&](const Vec2& p) { return oracle(p.norm()); });
    };
    double e10 = err_at(10), e20 = err_at(20), e40 = err_at(40);
    double order1 = std::log2(e10 / e20);
    double order2 = std::log2(e20 / e40);
    INFO("orders " << order1 << " " << order2);
    REQUIRE(order1 >= 1.8);
    REQUIRE(order2 >= 1.8);
}

TEST_CASE("rotation equivariance on the 60-degree symmetric mesh", "[cross_section]") {
    DiskMesh mesh = make_disk_mesh(1.0, 16);
    MatrixField2 D;
    D.a11 = Poly2::constant(1.5);
    D.a12 = Poly2::constant(0.3);
    D.a22 = Poly2::constant(0.9);
    const double c = 0.5, s = std::sqrt(3.0) / 2.0;  // rotation by pi/3
    MatrixField2 Drot;
    // R D R^T for the constant matrix
    double d11 = 1.5, d12 = 0.3, d22 = 0.9;
    double r11 = c * (c * d11 - s * d12) - s * (c * d12 - s * d22);
    double r12 = c * (s * d11 + c * d12) - s * (s * d12 + c * d22);
    double r22 = s * (s * d11 + c * d12) + c * (s * d12 + c * d22);
    Drot.a11 = Poly2::constant(r11);
    Drot.a12 = Poly2::constant(r12);
    Drot.a22 = Poly2::constant(r22);

    auto g = [](const Vec2& p) { return p.x + 0.3 * p.x * p.y; };  // odd in x: compatible with b = 0
    auto g_rot = [&](const Vec2& p) { return g(Vec2{c * p.x + s * p.y, -s * p.x + c * p.y}); };
    auto zero = [](const Vec2&) { return 0.0; };
    auto sol = solve_neumann_mean_zero(mesh, D, g, zero);
    auto sol_rot = solve_neumann_mean_zero(mesh, Drot, g_rot, zero);
    for (double r : {0.15, 0.5, 0.85})
        for (double th : {0.3, 1.7, 3.0, 5.1}) {
            Vec2 p{r * std::cos(th), r * std::sin(th)};
            Vec2 rp{c * p.x - s * p.y, s * p.x + c * p.y};
            REQUIRE(mesh.interpolate(rp, sol_rot.values) ==
                    Approx(mesh.interpolate(p, sol.values)).margin(2e-8));
        }
}

TEST_CASE("compatibility violation is rejected before solving", "[cross_section]") {
    DiskMesh mesh = make_disk_mesh(1.0, 8);
    REQUIRE_THROWS_AS(solve_neumann_mean_zero(mesh, MatrixField2::isotropic(1.0),
                                              [](const Vec2&) { return 1.0; },
                                              [](const Vec2&) { return 0.0; }),
                      SolverError);
}

TEST_CASE("solution depends linearly on the data", "[cross_section]") {
    DiskMesh mesh = make_disk_mesh(1.0, 12);
    auto one = [](const Vec2&) { return 2.0; };
    auto two = [](const Vec2&) { return 4.0; };
    auto b1 = [](const Vec2&) { return 1.0; };
    auto b2 = [](const Vec2&) { return 2.0; };
    auto sa = solve_neumann_mean_zero(mesh, MatrixField2::isotropic(1.0), one, b1);
    auto sb = solve_neumann_mean_zero(mesh, MatrixField2::isotropic(1.0), two, b2);
    for (std::size_t i = 0; i < sa.values.size(); i += 37)
        REQUIRE(sb.values[i] == Approx(2.0 * sa.values[i]).margin(1e-9));
}
