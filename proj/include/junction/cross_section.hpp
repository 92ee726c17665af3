#pragma once

// 2D anisotropic Neumann problems on the disk cross-section with a mean-zero
// constraint. Canonical strong form on the disk Y of radius h:
//
//     -div( D(xi) grad u ) = g - div G        in Y,
//     -(D grad u) . nu     = b - G . nu       on the circle,
//     <u> = int_Y u        = 0,
//
// with scalar data g, b and an optional vector field G whose divergence is
// never formed pointwise: the weak form is
//
//     int D grad u . grad v = int g v + int G . grad v - oint b v.
//
// Compatibility (take v = 1): int_Y g = oint b, checked on the exact circle
// by high-order polar quadrature before assembly. Uniqueness comes from one
// Lagrange multiplier enforcing the mean; the symmetric indefinite saddle
// system is Jacobi-scaled and solved by MINRES.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <unsupported/Eigen/IterativeSolvers>

#include "junction/config.hpp"
#include "junction/disk_mesh.hpp"
#include "junction/function_forms.hpp"
#include "junction/numerics.hpp"

namespace junction {

struct NeumannSolution {
    std::vector<double> values;     // nodal values, exactly mean-zero
    double solver_residual = 0.0;   // attained relative residual
    double mean = 0.0;              // discrete mean after projection
    double multiplier = 0.0;        // Lagrange multiplier (compatibility defect)
    int iterations = 0;
};

struct CrossSectionOptions {
    double solver_tol = 1e-10;
    int max_iterations = 10000;
    double compatibility_tol = 1e-10;
    bool check_compatibility = true;
};

using ScalarFn = std::function<double(const Vec2&)>;
using VectorFn = std::function<Vec2(const Vec2&)>;

// Exact mean-zero solution of the isotropic instance D = a I, g = (2/h) phi,
// b = phi:  u(r) = (phi / (a h)) (h^2/4 - r^2/2).
inline std::function<double(double)> isotropic_oracle(double h, double a, double phi_value) {
    if (a <= 0.0) throw std::invalid_argument("isotropic_oracle: a must be positive");
    return [h, a, phi_value](double r) { return phi_value / (a * h) * (h * h / 4.0 - r * r / 2.0); };
}

// int over the exact disk (polar, Gauss radial x trapezoid angular) and over
// the exact circle; used for the compatibility precondition so that mesh
// chord error does not pollute the check.
inline double integrate_disk_exact(const ScalarFn& f, double h, int nr = 24, int nth = 96) {
    const GaussRule& rule = gauss_legendre(nr);
    double acc = 0.0;
    for (int it = 0; it < nth; ++it) {
        double th = 2.0 * M_PI * (it + 0.5) / nth;
        double c = std::cos(th), s = std::sin(th);
        for (int ir = 0; ir < nr; ++ir) {
            double r = 0.5 * h * (1.0 + rule.nodes[static_cast<std::size_t>(ir)]);
            double w = 0.5 * h * rule.weights[static_cast<std::size_t>(ir)] * (2.0 * M_PI / nth);
            acc += w * r * f(Vec2{r * c, r * s});
        }
    }
    return acc;
}

inline double integrate_circle_exact(const ScalarFn& f, double h, int nth = 256) {
    double acc = 0.0;
    for (int it = 0; it < nth; ++it) {
        double th = 2.0 * M_PI * (it + 0.5) / nth;
        acc += f(Vec2{h * std::cos(th), h * std::sin(th)}) * (2.0 * M_PI * h / nth);
    }
    return acc;
}

// Full data set of one cross-section problem. The volume source splits into a
// smooth callable part g and a P1 nodal part (previous-order correctors); the
// vector field splits the same way: G(p) = G_smooth(p) + pvec(p) * u_h(p)
// with u_h the P1 interpolant of pvec_scale. Nodal parts integrate with the
// exact P1 element quadrature, so the discrete compatibility of recursively
// generated data holds to rounding.
struct CrossSectionData {
    ScalarFn g;                                    // smooth volume source
    const std::vector<double>* g_nodal = nullptr;  // P1 volume source
    ScalarFn b;                                    // boundary data
    VectorFn G;                                    // smooth vector field
    VectorFn pvec;                                 // P1-scaled vector field
    const std::vector<double>* pvec_scale = nullptr;
};

inline NeumannSolution solve_cross_section_problem(const DiskMesh& mesh, const MatrixField2& D,
                                                   const CrossSectionData& data,
                                                   const CrossSectionOptions& opts = {}) {
    const int n = mesh.n_vertices();

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(mesh.n_triangles()) * 9 + static_cast<std::size_t>(2 * n));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    std::vector<double> mass(static_cast<std::size_t>(n), 0.0);

    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        const Vec2 p[3] = {mesh.vertices[static_cast<std::size_t>(tri[0])],
                           mesh.vertices[static_cast<std::size_t>(tri[1])],
                           mesh.vertices[static_cast<std::size_t>(tri[2])]};
        const double area = mesh.tri_area[static_cast<std::size_t>(t)];
        // P1 gradients.
        double det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
        Vec2 grad[3] = {{(p[1].y - p[2].y) / det, (p[2].x - p[1].x) / det},
                        {(p[2].y - p[0].y) / det, (p[0].x - p[2].x) / det},
                        {(p[0].y - p[1].y) / det, (p[1].x - p[0].x) / det}};
        // Mid-edge quadrature, exact for quadratics.
        const Vec2 qp[3] = {{0.5 * (p[0].x + p[1].x), 0.5 * (p[0].y + p[1].y)},
                            {0.5 * (p[1].x + p[2].x), 0.5 * (p[1].y + p[2].y)},
                            {0.5 * (p[2].x + p[0].x), 0.5 * (p[2].y + p[0].y)}};
        // Shape value of vertex i at mid-edge q: 1/2 unless opposite.
        static const double shape[3][3] = {{0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}};
        double Dq[2][2], Dsum[2][2] = {{0, 0}, {0, 0}};
        for (int q = 0; q < 3; ++q) {
            D.eval(qp[q].x, qp[q].y, Dq);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) Dsum[r][c] += Dq[r][c] / 3.0;
        }
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                Vec2 Dg{Dsum[0][0] * grad[j].x + Dsum[0][1] * grad[j].y,
                        Dsum[1][0] * grad[j].x + Dsum[1][1] * grad[j].y};
                trips.emplace_back(tri[i], tri[j], area * Dg.dot(grad[i]));
            }
            mass[static_cast<std::size_t>(tri[i])] += area / 3.0;
            double load = 0.0;
            for (int q = 0; q < 3; ++q) {
                int va = q, vb = (q + 1) % 3;
                if (data.g) load += (area / 3.0) * shape[i][q] * data.g(qp[q]);
                if (data.g_nodal) {
                    double gq = 0.5 * ((*data.g_nodal)[static_cast<std::size_t>(tri[va])] +
                                       (*data.g_nodal)[static_cast<std::size_t>(tri[vb])]);
                    load += (area / 3.0) * shape[i][q] * gq;
                }
                Vec2 G{0.0, 0.0};
                if (data.G) G = data.G(qp[q]);
                if (data.pvec && data.pvec_scale) {
                    double uq = 0.5 * ((*data.pvec_scale)[static_cast<std::size_t>(tri[va])] +
                                       (*data.pvec_scale)[static_cast<std::size_t>(tri[vb])]);
                    Vec2 pv = data.pvec(qp[q]);
                    G = G + pv * uq;
                }
                load += (area / 3.0) * G.dot(grad[i]);
            }
            rhs[tri[i]] += load;
        }
    }
    // Boundary data: 2-point Gauss on each chord.
    if (data.b) {
        const GaussRule& g2 = gauss_legendre(2);
        for (const auto& e : mesh.boundary_edges) {
            const Vec2& a = mesh.vertices[static_cast<std::size_t>(e[0])];
            const Vec2& b = mesh.vertices[static_cast<std::size_t>(e[1])];
            double len = (b - a).norm();
            for (std::size_t q = 0; q < 2; ++q) {
                double t = 0.5 * (1.0 + g2.nodes[q]);
                Vec2 xp{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
                double w = 0.5 * len * g2.weights[q];
                double bv = data.b(xp);
                rhs[e[0]] -= w * bv * (1.0 - t);
                rhs[e[1]] -= w * bv * t;
            }
        }
    }
    // Compatibility: int_Y g = oint b on the exact geometry (smooth parts) and
    // with the P1 quadrature (nodal parts). Checked before the solve; the
    // multiplier absorbs only the harmless mesh-level discretization defect.
    if (opts.check_compatibility) {
        double vol = data.g ? integrate_disk_exact(data.g, mesh.radius) : 0.0;
        if (data.g_nodal)
            for (int i = 0; i < n; ++i) vol += mass[static_cast<std::size_t>(i)] * (*data.g_nodal)[static_cast<std::size_t>(i)];
        double bnd = data.b ? integrate_circle_exact(data.b, mesh.radius) : 0.0;
        double scale = std::max({1.0, std::abs(vol), std::abs(bnd)});
        if (std::abs(vol - bnd) > opts.compatibility_tol * scale)
            throw SolverError("cross-section compatibility violated: int g = " + std::to_string(vol) +
                              " vs oint b = " + std::to_string(bnd));
    }

    // Mean-zero constraint row/column.
    for (int i = 0; i < n; ++i) {
        trips.emplace_back(i, n, mass[static_cast<std::size_t>(i)]);
        trips.emplace_back(n, i, mass[static_cast<std::size_t>(i)]);
    }

    Eigen::SparseMatrix<double> A(n + 1, n + 1);
    A.setFromTriplets(trips.begin(), trips.end());

    // Symmetric Jacobi scaling; unit scale on the multiplier row.
    Eigen::VectorXd scale(n + 1);
    for (int i = 0; i <= n; ++i) {
        double d = A.coeff(i, i);
        scale[i] = d > 1e-300 ? 1.0 / std::sqrt(d) : 1.0;
    }
    Eigen::SparseMatrix<double> As = scale.asDiagonal() * A * scale.asDiagonal();
    Eigen::VectorXd bs = scale.asDiagonal() * rhs;

    Eigen::MINRES<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                  Eigen::IdentityPreconditioner>
        solver;
    solver.setTolerance(opts.solver_tol);
    solver.setMaxIterations(opts.max_iterations);
    solver.compute(As);
    Eigen::VectorXd xs = solver.solve(bs);
    if (solver.info() != Eigen::Success && solver.error() > opts.solver_tol * 10.0)
        throw SolverError("solve_neumann_mean_zero: MINRES did not converge, residual " +
                          std::to_string(solver.error()));
    Eigen::VectorXd x = scale.asDiagonal() * xs;

    NeumannSolution sol;
    sol.solver_residual = solver.error();
    sol.iterations = static_cast<int>(solver.iterations());
    sol.multiplier = x[n];
    sol.values.resize(static_cast<std::size_t>(n));
    double mean = 0.0, area = 0.0;
    for (int i = 0; i < n; ++i) {
        mean += mass[static_cast<std::size_t>(i)] * x[i];
        area += mass[static_cast<std::size_t>(i)];
    }
    double shift = mean / area;
    double mean2 = 0.0;
    for (int i = 0; i < n; ++i) {
        sol.values[static_cast<std::size_t>(i)] = x[i] - shift;
        mean2 += mass[static_cast<std::size_t>(i)] * sol.values[static_cast<std::size_t>(i)];
    }
    sol.mean = mean2 / area;
    return sol;
}

// Spec-level entry point: -div(D grad u) = volume_source in Y,
// -(D grad u).nu = boundary_flux on the circle, <u> = 0, with the divergence
// identity int volume_source = oint boundary_flux as precondition. An
// optional vector field adds -div G to the source and -G.nu to the flux
// without changing compatibility.
inline NeumannSolution solve_neumann_mean_zero(const DiskMesh& mesh, const MatrixField2& D,
                                               const ScalarFn& volume_source, const ScalarFn& boundary_flux,
                                               const VectorFn* div_field = nullptr,
                                               const CrossSectionOptions& opts = {}) {
    CrossSectionData data;
    data.g = volume_source;
    data.b = boundary_flux;
    if (div_field) data.G = *div_field;
    return solve_cross_section_problem(mesh, D, data, opts);
}

// Discrete mean and L2 norm with the consistent P1 quadrature.
inline double mesh_mean(const DiskMesh& mesh, const std::vector<double>& nodal) {
    double acc = 0.0, area = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        double a = mesh.tri_area[static_cast<std::size_t>(t)];
        acc += a / 3.0 *
               (nodal[static_cast<std::size_t>(tri[0])] + nodal[static_cast<std::size_t>(tri[1])] +
                nodal[static_cast<std::size_t>(tri[2])]);
        area += a;
    }
    return acc / area;
}

// L2 norm of (nodal - reference) over the mesh, mid-edge rule.
inline double mesh_l2_error(const DiskMesh& mesh, const std::vector<double>& nodal, const ScalarFn& ref) {
    double acc = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        const Vec2 p[3] = {mesh.vertices[static_cast<std::size_t>(tri[0])],
                           mesh.vertices[static_cast<std::size_t>(tri[1])],
                           mesh.vertices[static_cast<std::size_t>(tri[2])]};
        const double v[3] = {nodal[static_cast<std::size_t>(tri[0])], nodal[static_cast<std::size_t>(tri[1])],
                             nodal[static_cast<std::size_t>(tri[2])]};
        for (int q = 0; q < 3; ++q) {
            int i = q, j = (q + 1) % 3;
            Vec2 mid{0.5 * (p[i].x + p[j].x), 0.5 * (p[i].y + p[j].y)};
            double uh = 0.5 * (v[i] + v[j]);
            acc += mesh.tri_area[static_cast<std::size_t>(t)] / 3.0 * sqr(uh - ref(mid));
        }
    }
    return std::sqrt(acc);
}

inline double mesh_l2_norm(const DiskMesh& mesh, const ScalarFn& f) {
    return mesh_l2_error(mesh, std::vector<double>(static_cast<std::size_t>(mesh.n_vertices()), 0.0),
                         [&f](const Vec2& p) { return -f(p); });
}

}  // namespace junction
