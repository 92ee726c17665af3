#pragma once

// Voxelization of the truncated inner domain: an axis-aligned box of
// half-width ell0 (the node) with three cylindrical outlets of radii h_i
// attached to its positive faces, each truncated at xi_i = ell0 + L. All
// cells live on one uniform lattice of spacing ell0 / resolution, so the
// outlet meshes conform to the node faces. Cells are addressed by global
// lattice coordinates; the node occupies [0, n0)^3 and outlet o extends the
// o-th coordinate into [n0, n0 + nL).

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "junction/config.hpp"
#include "junction/numerics.hpp"

namespace junction {

class NodeDomain {
public:
    NodeDomain(double ell0, std::array<double, 3> h, double trunc_length, int resolution)
        : ell0_(ell0), h_(h), L_(trunc_length), res_(resolution) {
        for (int o = 0; o < 3; ++o)
            if (!(h_[static_cast<std::size_t>(o)] < ell0_))
                throw ValidationError("NodeDomain",
                                      "outlet radius h_" + std::to_string(o + 1) +
                                          " must be smaller than ell0 for the box node geometry");
        if (resolution < 4) throw std::invalid_argument("NodeDomain: resolution must be >= 4");
        if (L_ <= 2.0 + ell0_) throw std::invalid_argument("NodeDomain: truncation must exceed 2 + ell0");
        dx_ = ell0_ / res_;
        n0_ = 2 * res_;
        nL_ = static_cast<int>(std::llround(L_ / dx_));

        // Transverse disk masks on the shared lattice.
        for (int o = 0; o < 3; ++o) {
            auto& index = disk_index_[static_cast<std::size_t>(o)];
            auto& cells = disk_cells_[static_cast<std::size_t>(o)];
            index.assign(static_cast<std::size_t>(n0_) * static_cast<std::size_t>(n0_), -1);
            for (int q = 0; q < n0_; ++q)
                for (int p = 0; p < n0_; ++p) {
                    double u = lattice_coord(p), v = lattice_coord(q);
                    if (u * u + v * v <= sqr(h_[static_cast<std::size_t>(o)])) {
                        index[static_cast<std::size_t>(p + n0_ * q)] = static_cast<int>(cells.size());
                        cells.push_back({p, q});
                    }
                }
            if (cells.empty()) throw std::invalid_argument("NodeDomain: resolution too coarse for outlet disk");
        }

        node_cells_ = n0_ * n0_ * n0_;
        int offset = node_cells_;
        for (int o = 0; o < 3; ++o) {
            outlet_offset_[static_cast<std::size_t>(o)] = offset;
            offset += nL_ * static_cast<int>(disk_cells_[static_cast<std::size_t>(o)].size());
        }
        total_cells_ = offset;

        coords_.resize(static_cast<std::size_t>(total_cells_));
        for (int k = 0; k < n0_; ++k)
            for (int j = 0; j < n0_; ++j)
                for (int i = 0; i < n0_; ++i)
                    coords_[static_cast<std::size_t>(node_cell(i, j, k))] = {i, j, k};
        for (int o = 0; o < 3; ++o)
            for (int a = 0; a < nL_; ++a)
                for (std::size_t d = 0; d < disk_cells_[static_cast<std::size_t>(o)].size(); ++d) {
                    auto [p, q] = disk_cells_[static_cast<std::size_t>(o)][d];
                    std::array<int, 3> g{};
                    g[static_cast<std::size_t>(o)] = n0_ + a;
                    g[static_cast<std::size_t>(trans_axis(o, 0))] = p;
                    g[static_cast<std::size_t>(trans_axis(o, 1))] = q;
                    coords_[static_cast<std::size_t>(outlet_cell(o, a, static_cast<int>(d)))] = g;
                }
    }

    double ell0() const { return ell0_; }
    double dx() const { return dx_; }
    double trunc_length() const { return L_; }
    int resolution() const { return res_; }
    int n0() const { return n0_; }
    int n_axial() const { return nL_; }
    int total_cells() const { return total_cells_; }
    int node_cell_count() const { return node_cells_; }
    double radius(int o) const { return h_[static_cast<std::size_t>(o)]; }
    int disk_cell_count(int o) const { return static_cast<int>(disk_cells_[static_cast<std::size_t>(o)].size()); }
    double disk_area(int o) const { return disk_cell_count(o) * dx_ * dx_; }
    double cell_volume() const { return dx_ * dx_ * dx_; }

    // Transverse axes of outlet o in increasing order (matches the paper's
    // xbar ordering).
    static int trans_axis(int o, int which) {
        static const int axes[3][2] = {{1, 2}, {0, 2}, {0, 1}};
        return axes[o][which];
    }

    double lattice_coord(int idx) const { return -ell0_ + (idx + 0.5) * dx_; }

    int node_cell(int i, int j, int k) const { return i + n0_ * (j + n0_ * k); }

    int outlet_cell(int o, int a, int d) const {
        return outlet_offset_[static_cast<std::size_t>(o)] + a * disk_cell_count(o) + d;
    }

    // -1 for node, otherwise the outlet axis.
    int cell_region(int cell) const {
        if (cell < node_cells_) return -1;
        for (int o = 2; o >= 0; --o)
            if (cell >= outlet_offset_[static_cast<std::size_t>(o)]) return o;
        return -1;
    }

    int axial_index(int o, int cell) const {
        return (cell - outlet_offset_[static_cast<std::size_t>(o)]) / disk_cell_count(o);
    }

    const std::array<int, 3>& lattice(int cell) const { return coords_[static_cast<std::size_t>(cell)]; }

    Vec3 cell_center(int cell) const {
        const auto& g = coords_[static_cast<std::size_t>(cell)];
        Vec3 c;
        for (int d = 0; d < 3; ++d) {
            if (g[static_cast<std::size_t>(d)] < n0_)
                c[d] = lattice_coord(g[static_cast<std::size_t>(d)]);
            else
                c[d] = ell0_ + (g[static_cast<std::size_t>(d)] - n0_ + 0.5) * dx_;
        }
        return c;
    }

    // Cell at global lattice coordinates, or -1.
    int resolve(int gi, int gj, int gk) const {
        std::array<int, 3> g{gi, gj, gk};
        int out_axis = -1;
        for (int d = 0; d < 3; ++d) {
            if (g[static_cast<std::size_t>(d)] < 0) return -1;
            if (g[static_cast<std::size_t>(d)] >= n0_) {
                if (out_axis >= 0) return -1;  // diagonal corner regions are outside
                out_axis = d;
            }
        }
        if (out_axis < 0) return node_cell(gi, gj, gk);
        int a = g[static_cast<std::size_t>(out_axis)] - n0_;
        if (a >= nL_) return -1;
        int p = g[static_cast<std::size_t>(trans_axis(out_axis, 0))];
        int q = g[static_cast<std::size_t>(trans_axis(out_axis, 1))];
        int d = disk_index_[static_cast<std::size_t>(out_axis)][static_cast<std::size_t>(p + n0_ * q)];
        if (d < 0) return -1;
        return outlet_cell(out_axis, a, d);
    }

    // Global lattice index of a coordinate value (can exceed the node range).
    int lattice_index(double xi) const { return static_cast<int>(std::floor((xi + ell0_) / dx_)); }

private:
    double ell0_;
    std::array<double, 3> h_;
    double L_;
    double dx_ = 0.0;
    int res_, n0_ = 0, nL_ = 0;
    int node_cells_ = 0, total_cells_ = 0;
    std::array<std::vector<int>, 3> disk_index_;
    std::array<std::vector<std::pair<int, int>>, 3> disk_cells_;
    std::array<int, 3> outlet_offset_{};
    std::vector<std::array<int, 3>> coords_;
};

// Trilinear interpolation of cell-centered data on the node lattice; lattice
// corners that fall outside the domain (walls, caps, disk rim) are replaced
// by the nearest valid corner of the stencil.
inline double trilinear_cells(const NodeDomain& dom, const std::vector<double>& values, const Vec3& xi) {
    double gx = (xi[0] + dom.ell0()) / dom.dx() - 0.5;
    double gy = (xi[1] + dom.ell0()) / dom.dx() - 0.5;
    double gz = (xi[2] + dom.ell0()) / dom.dx() - 0.5;
    int bx = static_cast<int>(std::floor(gx));
    int by = static_cast<int>(std::floor(gy));
    int bz = static_cast<int>(std::floor(gz));
    double fx = gx - bx, fy = gy - by, fz = gz - bz;
    double acc = 0.0, wsum = 0.0;
    double fallback = 0.0;
    double best = -1.0;
    for (int c = 0; c < 8; ++c) {
        int ix = bx + (c & 1), iy = by + ((c >> 1) & 1), iz = bz + ((c >> 2) & 1);
        double w = ((c & 1) ? fx : 1.0 - fx) * (((c >> 1) & 1) ? fy : 1.0 - fy) * (((c >> 2) & 1) ? fz : 1.0 - fz);
        int cell = dom.resolve(ix, iy, iz);
        if (cell >= 0) {
            acc += w * values[static_cast<std::size_t>(cell)];
            wsum += w;
            if (w > best) {
                best = w;
                fallback = values[static_cast<std::size_t>(cell)];
            }
        }
    }
    if (wsum <= 0.0) throw SolverError("trilinear_cells: point outside the truncated inner domain");
    return acc + (1.0 - wsum) * fallback;
}

}  // namespace junction
