#pragma once

// Node (inner) problems on the truncated junction domain.
//
// Potential: the node velocity is conservative, V = grad p with
//     Delta p = 0 in the node box, dp/dn = v_i on the outlet disks,
//     dp/dn = 0 on the walls, mean p = 0,
// solvable because sum h_i^2 v_i = 0. Discretely the imposed disk fluxes are
// balanced over the voxelized disk areas so the Neumann problem is exactly
// compatible; the same corrected constants serve as the outlet convective
// velocities.
//
// Inner terms: N_k solves the homogeneous convection-diffusion problem on the
// unbounded junction, stabilizing to w_k^(j)(0) in outlet j. We solve for
//     Ntilde_k = N_k - sum_j w_k^(j)(0) chi(xi_j)
// on the truncated domain (chi smooth, 0 below 1+ell0, 1 above 2+ell0), with
// outlet sources f_j = a_jj w chi'' - v_j w chi', zero total flux on walls,
// homogeneous Dirichlet at the inflow cap and zero total flux at the outflow
// caps (see the cap assembly note below); the solvability functional
//     sum_j int_{outlet_j} f_j = -pi sum_j h_j^2 v_j w_k^(j)(0)
// must vanish (the Kirchhoff condition). Discretization: cell-centered finite
// volumes, two-point diffusive flux with a deferred cross-term correction for
// full tensors, first-order upwind convection; BiCGSTAB/ILUT linear solves.

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>

#include "junction/config.hpp"
#include "junction/node_domain.hpp"
#include "junction/numerics.hpp"
#include "junction/smooth_profiles.hpp"

namespace junction {

// Reconstruction cut-off chi_{ell0}: 0 below 1 + ell0, 1 above 2 + ell0.
inline double node_cutoff(double t, double ell0) { return smooth_step(t - (1.0 + ell0)); }
inline double node_cutoff_d1(double t, double ell0) { return smooth_step_d1(t - (1.0 + ell0)); }
inline double node_cutoff_d2(double t, double ell0) { return smooth_step_d2(t - (1.0 + ell0)); }

// Axial source of the truncated problem on outlet j (sampled form).
inline std::function<double(double)> node_source(int j, const std::array<double, 3>& w_zero,
                                                 const DiffusionSpec& diffusion,
                                                 const std::array<double, 3>& node_constants, double ell0) {
    const double a = diffusion.axial_constants[static_cast<std::size_t>(j)];
    const double v = node_constants[static_cast<std::size_t>(j)];
    const double w = w_zero[static_cast<std::size_t>(j)];
    return [a, v, w, ell0](double t) {
        return a * w * node_cutoff_d2(t, ell0) - v * w * node_cutoff_d1(t, ell0);
    };
}

// Quadrature value of sum_j int_{Xi^(j)} f_j; equals -pi sum_j h_j^2 v_j w_j.
inline double check_node_solvability(const std::array<double, 3>& w_zero, const JunctionSpec& spec,
                                     const DiffusionSpec& diffusion,
                                     const std::array<double, 3>& node_constants) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) {
        auto f = node_source(j, w_zero, diffusion, node_constants, spec.ell0);
        double line = integrate_gauss(f, 1.0 + spec.ell0, 2.0 + spec.ell0, 12, 32);
        acc += M_PI * sqr(spec.h[static_cast<std::size_t>(j)]) * line;
    }
    return acc;
}

struct NodeSolveOptions {
    double solver_tol = 1e-10;
    int max_iterations = 100000;
    double outer_tol = 1e-11;
    int max_outer = 60;
    double solvability_tol = 1e-8;
    double ilut_droptol = 1e-3;
    int ilut_fill = 6;
    double stabilization_sigma = 1e6;
};

struct NodePotential {
    std::shared_ptr<const NodeDomain> domain;
    std::vector<double> p;                      // node-block cell values, zero mean
    std::array<double, 3> imposed_flux{};       // balanced disk fluxes (v tilde)
    std::array<std::vector<double>, 3> velocity_cells;  // full-domain V components
    double mean = 0.0;
    double boundary_flux_total = 0.0;           // sum of imposed boundary fluxes
    double solver_residual = 0.0;
    int iterations = 0;

    Vec3 velocity(const Vec3& xi) const {
        return {trilinear_cells(*domain, velocity_cells[0], xi), trilinear_cells(*domain, velocity_cells[1], xi),
                trilinear_cells(*domain, velocity_cells[2], xi)};
    }
};

inline NodePotential solve_node_potential(std::shared_ptr<const NodeDomain> domain,
                                          const std::array<double, 3>& node_constants,
                                          const NodeSolveOptions& opts = {}) {
    const NodeDomain& dom = *domain;
    {
        double flux = 0.0;
        for (int o = 0; o < 3; ++o) flux += sqr(dom.radius(o)) * node_constants[static_cast<std::size_t>(o)];
        if (std::abs(flux) > 1e-10)
            throw ValidationError("solve_node_potential",
                                  "Neumann compatibility violated: sum h^2 v = " + std::to_string(flux));
    }
    // Balance the voxelized disk fluxes exactly.
    double raw = 0.0, area_total = 0.0;
    for (int o = 0; o < 3; ++o) {
        raw += node_constants[static_cast<std::size_t>(o)] * dom.disk_area(o);
        area_total += dom.disk_area(o);
    }
    NodePotential pot;
    pot.domain = domain;
    for (int o = 0; o < 3; ++o)
        pot.imposed_flux[static_cast<std::size_t>(o)] = node_constants[static_cast<std::size_t>(o)] - raw / area_total;
    {
        double check = 0.0;
        for (int o = 0; o < 3; ++o) check += pot.imposed_flux[static_cast<std::size_t>(o)] * dom.disk_area(o);
        pot.boundary_flux_total = check;
    }

    const int n0 = dom.n0();
    const int n = dom.node_cell_count();
    const double dx = dom.dx();
    const double A_over_d = dx;  // face area dx^2 over distance dx
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 7);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n0; ++k)
        for (int j = 0; j < n0; ++j)
            for (int i = 0; i < n0; ++i) {
                int P = dom.node_cell(i, j, k);
                std::array<int, 3> g{i, j, k};
                double diag = 0.0;
                for (int d = 0; d < 3; ++d) {
                    auto gn = g;
                    gn[static_cast<std::size_t>(d)] += 1;
                    if (gn[static_cast<std::size_t>(d)] < n0) {
                        int N = dom.node_cell(gn[0], gn[1], gn[2]);
                        diag += A_over_d;
                        trips.emplace_back(P, N, -A_over_d);
                        trips.emplace_back(N, P, -A_over_d);
                        trips.emplace_back(N, N, A_over_d);
                    } else {
                        // positive box face: disk flux if the outlet mask covers it
                        int cell = dom.resolve(d == 0 ? n0 : i, d == 1 ? n0 : j, d == 2 ? n0 : k);
                        if (cell >= 0) rhs[P] += pot.imposed_flux[static_cast<std::size_t>(d)] * dx * dx;
                    }
                }
                trips.emplace_back(P, P, diag);
            }
    Eigen::SparseMatrix<double> M(n, n);
    M.setFromTriplets(trips.begin(), trips.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-12);
    cg.setMaxIterations(opts.max_iterations);
    cg.compute(M);
    Eigen::VectorXd x = cg.solve(rhs);
    if (cg.info() != Eigen::Success && cg.error() > 1e-9)
        throw SolverError("solve_node_potential: CG did not converge, residual " + std::to_string(cg.error()));
    pot.solver_residual = cg.error();
    pot.iterations = static_cast<int>(cg.iterations());

    double mean = x.sum() / n;
    pot.p.resize(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) pot.p[static_cast<std::size_t>(c)] = x[c] - mean;
    pot.mean = 0.0;

    // Cell-centered velocity on the whole truncated domain: grad p in the
    // node (one-sided with Neumann ghosts at boundaries), the balanced axial
    // constant in the outlets.
    for (int d = 0; d < 3; ++d)
        pot.velocity_cells[static_cast<std::size_t>(d)].assign(static_cast<std::size_t>(dom.total_cells()), 0.0);
    for (int c = 0; c < n; ++c) {
        const auto& g = dom.lattice(c);
        for (int d = 0; d < 3; ++d) {
            auto gp = g, gm = g;
            gp[static_cast<std::size_t>(d)] += 1;
            gm[static_cast<std::size_t>(d)] -= 1;
            int cp = gp[static_cast<std::size_t>(d)] < n0 ? dom.node_cell(gp[0], gp[1], gp[2]) : -1;
            int cm = gm[static_cast<std::size_t>(d)] >= 0 ? dom.node_cell(gm[0], gm[1], gm[2]) : -1;
            double up, um;
            if (cp >= 0)
                up = pot.p[static_cast<std::size_t>(cp)];
            else {
                int ifc = dom.resolve(d == 0 ? n0 : g[0], d == 1 ? n0 : g[1], d == 2 ? n0 : g[2]);
                double bc = ifc >= 0 ? pot.imposed_flux[static_cast<std::size_t>(d)] : 0.0;
                up = pot.p[static_cast<std::size_t>(c)] + dom.dx() * bc;
            }
            if (cm >= 0)
                um = pot.p[static_cast<std::size_t>(cm)];
            else
                um = pot.p[static_cast<std::size_t>(c)];  // zero-flux wall ghost
            pot.velocity_cells[static_cast<std::size_t>(d)][static_cast<std::size_t>(c)] =
                (up - um) / ((cp >= 0 ? 1.0 : 0.5) + (cm >= 0 ? 1.0 : 0.5)) / dom.dx() * 2.0;
        }
    }
    for (int o = 0; o < 3; ++o)
        for (int a = 0; a < dom.n_axial(); ++a)
            for (int dcl = 0; dcl < dom.disk_cell_count(o); ++dcl)
                pot.velocity_cells[static_cast<std::size_t>(o)]
                                  [static_cast<std::size_t>(dom.outlet_cell(o, a, dcl))] =
                    pot.imposed_flux[static_cast<std::size_t>(o)];
    return pot;
}

struct OutletProfile {
    std::vector<double> xi;
    std::vector<double> avg;
    std::vector<double> avg_minus_w;
};

struct NodeTerm {
    int order = 0;
    std::array<double, 3> w_zero{};
    std::shared_ptr<const NodeDomain> domain;
    std::shared_ptr<const NodePotential> potential;
    std::vector<double> tilde;                       // Ntilde at cell centers
    std::vector<double> n_cells;                     // N at cell centers
    std::array<std::vector<double>, 3> dn_axial;     // d/dxi_d of N at cell centers
    std::array<OutletProfile, 3> profiles;
    std::array<double, 3> fitted_rate{};
    double solvability_residual = 0.0;
    double cap_mismatch = 0.0;
    double solver_residual = 0.0;
    int iterations = 0;
    int outer_iterations = 0;

    double value(const Vec3& xi) const {
        double acc = trilinear_cells(*domain, tilde, xi);
        for (int j = 0; j < 3; ++j) acc += w_zero[static_cast<std::size_t>(j)] * node_cutoff(xi[j], domain->ell0());
        return acc;
    }

    double tilde_value(const Vec3& xi) const { return trilinear_cells(*domain, tilde, xi); }

    double axial_derivative(int o, const Vec3& xi) const {
        return trilinear_cells(*domain, dn_axial[static_cast<std::size_t>(o)], xi);
    }

    // Discrete flux of Ntilde through the cross-section between axial index a
    // and a+1 of outlet o (diffusive two-point + upwind convective), used by
    // the conservation checks.
    double axial_flux(int o, int a) const {
        const NodeDomain& dom = *domain;
        const double A = dom.dx() * dom.dx();
        const double v = potential->imposed_flux[static_cast<std::size_t>(o)];
        const double a_ax = axial_diffusion[static_cast<std::size_t>(o)];
        double acc = 0.0;
        for (int dcl = 0; dcl < dom.disk_cell_count(o); ++dcl) {
            double uP = tilde[static_cast<std::size_t>(dom.outlet_cell(o, a, dcl))];
            double uN = tilde[static_cast<std::size_t>(dom.outlet_cell(o, a + 1, dcl))];
            acc += A * (-a_ax * (uN - uP) / dom.dx() + std::max(v, 0.0) * uP + std::min(v, 0.0) * uN);
        }
        return acc;
    }

    std::array<double, 3> axial_diffusion{1.0, 1.0, 1.0};  // outlet axial constants, set per solve
};

// Fitted stabilization rate of the cross-section average on one outlet:
// least-squares slope of log|avg(N) - w| over the window beyond the
// reconstruction band and clear of the cap. Outflow outlets carry an exactly
// constant average (the averaged outlet equation -aA'' + vA' = 0 with v > 0
// has no decaying nonconstant mode), so their tail is numerical noise; a tail
// below the noise ceiling yields the +infinity sentinel. A large tail that
// fails to decrease signals an unconverged solve and is an error.
inline double fit_decay_rate(const NodeTerm& term, int outlet) {
    const OutletProfile& prof = term.profiles[static_cast<std::size_t>(outlet)];
    const double ell0 = term.domain->ell0();
    const double L = term.domain->trunc_length();
    double scale = 1.0;
    for (double w : term.w_zero) scale = std::max(scale, std::abs(w));
    const double floor = 1e-8 * scale;          // "tail below noise floor"
    const double noise_ceiling = 1e-3 * scale;  // above this a flat tail is an error
    std::vector<double> xs, ys;
    double peak = 0.0;
    for (std::size_t i = 0; i < prof.xi.size(); ++i) {
        double xi = prof.xi[i];
        if (xi < 2.0 + ell0 || xi > ell0 + L - 2.0) continue;
        double y = std::abs(prof.avg_minus_w[i]);
        peak = std::max(peak, y);
        if (y > floor) {
            xs.push_back(xi);
            ys.push_back(std::log(y));
        }
    }
    if (peak < floor || xs.size() < 6) return std::numeric_limits<double>::infinity();
    LineFit fit = fit_line(xs, ys);
    if (fit.slope >= 0.0) {
        if (peak <= noise_ceiling) return std::numeric_limits<double>::infinity();
        throw SolverError("fit_decay_rate: non-monotone tail on outlet " + std::to_string(outlet + 1) +
                          " (slope " + std::to_string(fit.slope) + ", peak " + std::to_string(peak) + ")");
    }
    return -fit.slope;
}

namespace detail {

inline bool diffusion_has_cross_terms(const DiffusionSpec& diff) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j && !diff.node_matrix.entries[i][j].is_zero()) return true;
    for (int o = 0; o < 3; ++o)
        if (!diff.cross[static_cast<std::size_t>(o)].a12.is_zero()) return true;
    return false;
}

// Cell-centered derivative of `values` in direction d with one-sided
// fallbacks; used by the deferred cross-term correction and the output
// gradients.
inline std::vector<double> cell_derivative(const NodeDomain& dom, const std::vector<double>& values, int d) {
    const int n = dom.total_cells();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < n; ++c) {
        auto gp = dom.lattice(c), gm = dom.lattice(c);
        gp[static_cast<std::size_t>(d)] += 1;
        gm[static_cast<std::size_t>(d)] -= 1;
        int cp = dom.resolve(gp[0], gp[1], gp[2]);
        int cm = dom.resolve(gm[0], gm[1], gm[2]);
        if (cp >= 0 && cm >= 0)
            out[static_cast<std::size_t>(c)] =
                (values[static_cast<std::size_t>(cp)] - values[static_cast<std::size_t>(cm)]) / (2.0 * dom.dx());
        else if (cp >= 0)
            out[static_cast<std::size_t>(c)] =
                (values[static_cast<std::size_t>(cp)] - values[static_cast<std::size_t>(c)]) / dom.dx();
        else if (cm >= 0)
            out[static_cast<std::size_t>(c)] =
                (values[static_cast<std::size_t>(c)] - values[static_cast<std::size_t>(cm)]) / dom.dx();
    }
    return out;
}

}  // namespace detail

inline NodeTerm solve_node_term(std::shared_ptr<const NodeDomain> domain,
                                std::shared_ptr<const NodePotential> potential, const Config& cfg, int order,
                                const std::array<double, 3>& w_zero, const NodeSolveOptions& opts = {}) {
    const NodeDomain& dom = *domain;
    NodeTerm term;
    term.order = order;
    term.w_zero = w_zero;
    term.domain = domain;
    term.potential = potential;
    term.axial_diffusion = cfg.diffusion.axial_constants;

    term.solvability_residual =
        check_node_solvability(w_zero, cfg.spec, cfg.diffusion, cfg.velocity.node_constants);
    if (std::abs(term.solvability_residual) > opts.solvability_tol)
        throw SolverError("solve_node_term: solvability violated, residual = " +
                          std::to_string(term.solvability_residual));

    const int n = dom.total_cells();
    const double dx = dom.dx();
    const double A = dx * dx;
    const double ell0 = dom.ell0();
    term.tilde.assign(static_cast<std::size_t>(n), 0.0);

    double w_scale = 0.0;
    for (double w : w_zero) w_scale = std::max(w_scale, std::abs(w));
    const bool trivial = w_scale == 0.0;

    if (!trivial) {
        const auto& vt = potential->imposed_flux;
        // Truncation closure. On the inflow outlet (v < 0) a homogeneous
        // Dirichlet cap is the correct upstream condition. On outflow outlets
        // (v > 0) no pointwise cap condition can emulate decay at infinity:
        // the averaged outlet equation -aA'' + vA' = 0 has the modes {1,
        // exp(v xi/a)}, the constant passes a Dirichlet cap through a local
        // layer and the growing mode carries zero flux, so a spurious
        // flux-balanced constant always survives and is selected by the node
        // instead of vanishing. The remedy uses an exact structural identity:
        // on an outflow outlet the cross-section average of the full inner
        // term satisfies -a B'' + v B' = 0 with B bounded at infinity, hence
        // B = w identically along the whole outlet. A sink
        //     sigma * (avg(N) - w) = sigma * (avg(Ntilde) - w (1 - chi))
        // added on every outflow slice therefore vanishes on the exact
        // solution while giving every spurious average mode a positive decay
        // rate. Slice averages enter as sparse auxiliary unknowns.
        std::vector<int> slice_aux;  // auxiliary index per (outflow outlet, slice), -1 if none
        slice_aux.assign(static_cast<std::size_t>(3 * dom.n_axial()), -1);
        int n_extra = 0;
        for (int o = 0; o < 3; ++o) {
            if (vt[static_cast<std::size_t>(o)] <= 0.0) continue;
            for (int a = 0; a < dom.n_axial(); ++a)
                slice_aux[static_cast<std::size_t>(o * dom.n_axial() + a)] = n + n_extra++;
        }
        const int ntot = n + n_extra;

        // Assembly: iterate positive-direction faces once.
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(n) * 7);
        std::vector<double> diag(static_cast<std::size_t>(ntot), 0.0);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ntot);

        // Stiffness sigma of the average pin, entered in a balanced scaling:
        // the auxiliary unknown is the scaled deviation of the slice average
        // from its exact value, the force column carries a typical matrix
        // entry, so neither the matrix nor the right-hand side is inflated by
        // sigma (BiCGSTAB tolerances are relative).
        for (int o = 0; o < 3; ++o)
            for (int a = 0; a < dom.n_axial(); ++a) {
                int aux = slice_aux[static_cast<std::size_t>(o * dom.n_axial() + a)];
                if (aux < 0) continue;
                const int count = dom.disk_cell_count(o);
                const double w_o = w_zero[static_cast<std::size_t>(o)];
                const double chi_a = node_cutoff(ell0 + (a + 0.5) * dx, ell0);
                const double col = cfg.diffusion.axial_constants[static_cast<std::size_t>(o)] * dx;
                const double s = col / (opts.stabilization_sigma * dom.cell_volume());
                diag[static_cast<std::size_t>(aux)] = -s;
                rhs[aux] = w_o * (1.0 - chi_a);
                for (int dcl = 0; dcl < count; ++dcl) {
                    int cell = dom.outlet_cell(o, a, dcl);
                    trips.emplace_back(aux, cell, 1.0 / count);
                    trips.emplace_back(cell, aux, col);
                }
            }

        struct CrossFace {
            int P, N, d;
            double coef[3];  // D_{d,t} at the face for t != d (indexed by axis)
        };
        std::vector<CrossFace> cross_faces;
        const bool has_cross = detail::diffusion_has_cross_terms(cfg.diffusion);

        double Dm[3][3];
        for (int P = 0; P < n; ++P) {
            const auto g = dom.lattice(P);
            const int rP = dom.cell_region(P);
            const Vec3 cP = dom.cell_center(P);
            for (int d = 0; d < 3; ++d) {
                auto gn = g;
                gn[static_cast<std::size_t>(d)] += 1;
                const int N = dom.resolve(gn[0], gn[1], gn[2]);
                if (N < 0) {
                    // Cap (homogeneous Dirichlet) or wall (zero total flux).
                    if (rP == d && dom.axial_index(d, P) == dom.n_axial() - 1) {
                        const double a = cfg.diffusion.axial_constants[static_cast<std::size_t>(d)];
                        const double v = vt[static_cast<std::size_t>(d)];
                        diag[static_cast<std::size_t>(P)] += 2.0 * a * A / dx + A * std::max(v, 0.0);
                    }
                    continue;
                }
                const int rN = dom.cell_region(N);
                Vec3 face = cP;
                face[d] += 0.5 * dx;
                double Dnn = 0.0, vel = 0.0;
                double cross_coef[3] = {0.0, 0.0, 0.0};
                if (rP == -1 && rN == -1) {
                    cfg.diffusion.node_matrix.eval(face[0], face[1], face[2], Dm);
                    Dnn = Dm[d][d];
                    if (has_cross)
                        for (int t = 0; t < 3; ++t)
                            if (t != d) cross_coef[t] = Dm[d][t];
                    vel = (potential->p[static_cast<std::size_t>(N)] - potential->p[static_cast<std::size_t>(P)]) / dx;
                } else if (rP == -1 && rN == d) {
                    // node-outlet interface: harmonic-mean normal diffusion
                    cfg.diffusion.node_matrix.eval(face[0], face[1], face[2], Dm);
                    const double a_out = cfg.diffusion.axial_constants[static_cast<std::size_t>(d)];
                    Dnn = 2.0 * Dm[d][d] * a_out / (Dm[d][d] + a_out);
                    vel = vt[static_cast<std::size_t>(d)];
                } else if (rP == rN && rP == d) {
                    Dnn = cfg.diffusion.axial_constants[static_cast<std::size_t>(d)];
                    vel = vt[static_cast<std::size_t>(d)];
                } else {
                    // transverse face inside outlet rP
                    const int o = rP;
                    const int t0 = NodeDomain::trans_axis(o, 0), t1 = NodeDomain::trans_axis(o, 1);
                    double m[2][2];
                    double u = face[t0], w = face[t1];
                    cfg.diffusion.cross[static_cast<std::size_t>(o)].eval(u, w, m);
                    const int l = (d == t0) ? 0 : 1;
                    Dnn = m[l][l];
                    if (has_cross) cross_coef[l == 0 ? t1 : t0] = m[l][1 - l];
                    vel = 0.0;
                }
                const double dc = Dnn * A / dx;
                const double cp = A * std::max(vel, 0.0);
                const double cn = A * std::min(vel, 0.0);
                diag[static_cast<std::size_t>(P)] += dc + cp;
                trips.emplace_back(P, N, -dc + cn);
                diag[static_cast<std::size_t>(N)] += dc - cn;
                trips.emplace_back(N, P, -dc - cp);
                if (has_cross && (cross_coef[0] != 0.0 || cross_coef[1] != 0.0 || cross_coef[2] != 0.0))
                    cross_faces.push_back({P, N, d, {cross_coef[0], cross_coef[1], cross_coef[2]}});
            }
            if (rP >= 0) {
                // Source built with the balanced outlet velocity: the discrete
                // transport uses vt, so the reconstruction N = sum w chi + Ntilde
                // solves the vt-problem exactly. Identical to node_source when
                // the voxelized disk areas balance exactly (equal radii).
                std::array<double, 3> vt_arr{vt[0], vt[1], vt[2]};
                auto f = node_source(rP, w_zero, cfg.diffusion, vt_arr, ell0);
                rhs[P] += f(cP[rP]) * dom.cell_volume();
            }
        }
        for (int c = 0; c < ntot; ++c) trips.emplace_back(c, c, diag[static_cast<std::size_t>(c)]);

        Eigen::SparseMatrix<double> M(ntot, ntot);
        M.setFromTriplets(trips.begin(), trips.end());

        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
        solver.preconditioner().setDroptol(opts.ilut_droptol);
        solver.preconditioner().setFillfactor(opts.ilut_fill);
        solver.setTolerance(opts.solver_tol);
        solver.setMaxIterations(opts.max_iterations);
        solver.compute(M);
        if (solver.info() != Eigen::Success) throw SolverError("solve_node_term: preconditioner failed");

        Eigen::VectorXd u = Eigen::VectorXd::Zero(ntot);
        Eigen::VectorXd b = rhs;
        for (int outer = 0;; ++outer) {
            Eigen::VectorXd u_new = solver.solveWithGuess(b, u);
            if (solver.info() != Eigen::Success && solver.error() > opts.solver_tol * 10.0)
                throw SolverError("solve_node_term: BiCGSTAB stagnated, residual " +
                                  std::to_string(solver.error()));
            term.solver_residual = solver.error();
            term.iterations += static_cast<int>(solver.iterations());
            double diff = (u_new - u).lpNorm<Eigen::Infinity>();
            u = u_new;
            term.outer_iterations = outer + 1;
            if (cross_faces.empty()) break;
            if (outer > 0 && diff <= opts.outer_tol * std::max(1.0, w_scale)) break;
            if (outer + 1 >= opts.max_outer)
                throw SolverError("solve_node_term: cross-term correction did not settle");
            // re-evaluate deferred cross fluxes
            std::vector<double> uv(u.data(), u.data() + n);
            std::array<std::vector<double>, 3> grad;
            for (int d = 0; d < 3; ++d) grad[static_cast<std::size_t>(d)] = detail::cell_derivative(dom, uv, d);
            b = rhs;
            for (const auto& f : cross_faces) {
                double corr = 0.0;
                for (int t = 0; t < 3; ++t)
                    if (f.coef[t] != 0.0)
                        corr += f.coef[t] * 0.5 *
                                (grad[static_cast<std::size_t>(t)][static_cast<std::size_t>(f.P)] +
                                 grad[static_cast<std::size_t>(t)][static_cast<std::size_t>(f.N)]);
                // flux out of P through the face: -A * sum_t D_dt dbar_t u
                b[f.P] += A * corr;
                b[f.N] -= A * corr;
            }
        }
        for (int c = 0; c < n; ++c) term.tilde[static_cast<std::size_t>(c)] = u[c];
    }

    // Reconstruction N = sum_j w_j chi(xi_j) + Ntilde at cell centers.
    term.n_cells = term.tilde;
    for (int c = 0; c < n; ++c) {
        int o = dom.cell_region(c);
        if (o >= 0)
            term.n_cells[static_cast<std::size_t>(c)] +=
                w_zero[static_cast<std::size_t>(o)] * node_cutoff(dom.cell_center(c)[o], ell0);
    }
    for (int d = 0; d < 3; ++d) term.dn_axial[static_cast<std::size_t>(d)] = detail::cell_derivative(dom, term.n_cells, d);

    for (int o = 0; o < 3; ++o) {
        OutletProfile& prof = term.profiles[static_cast<std::size_t>(o)];
        for (int a = 0; a < dom.n_axial(); ++a) {
            double acc = 0.0;
            for (int dcl = 0; dcl < dom.disk_cell_count(o); ++dcl)
                acc += term.n_cells[static_cast<std::size_t>(dom.outlet_cell(o, a, dcl))];
            double avg = acc / dom.disk_cell_count(o);
            prof.xi.push_back(ell0 + (a + 0.5) * dx);
            prof.avg.push_back(avg);
            prof.avg_minus_w.push_back(avg - w_zero[static_cast<std::size_t>(o)]);
        }
    }
    term.cap_mismatch = 0.0;
    for (int o = 0; o < 3; ++o)
        term.cap_mismatch = std::max(term.cap_mismatch, std::abs(term.profiles[static_cast<std::size_t>(o)].avg_minus_w.back()));
    return term;
}

}  // namespace junction
