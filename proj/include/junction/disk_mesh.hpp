#pragma once

// Triangulation of the disk |xi| < h by concentric rings: ring j of R carries
// 6j vertices at radius h j / R, zipped to ring j-1 by angle. This keeps all
// boundary vertices exactly on the circle, avoids any polar degeneracy at the
// center, and is refinable by increasing R. The mesh is invariant under
// rotation by 60 degrees, which the equivariance tests use.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "junction/numerics.hpp"

namespace junction {

struct DiskMesh {
    double radius = 1.0;
    int rings = 0;
    std::vector<Vec2> vertices;                    // vertex 0 is the center
    std::vector<std::array<int, 3>> triangles;     // CCW
    std::vector<std::array<int, 2>> boundary_edges;
    std::vector<int> ring_start;                   // first vertex index of ring j (1-based ring)
    std::vector<double> tri_area;
    std::vector<int> band_start;                   // first triangle index of band j

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }

    double total_area() const {
        double a = 0.0;
        for (double t : tri_area) a += t;
        return a;
    }

    // P1 gradient of the nodal values on a triangle (constant per triangle).
    Vec2 gradient(int tri, const std::vector<double>& nodal) const {
        const auto& t = triangles[static_cast<std::size_t>(tri)];
        const Vec2& p0 = vertices[static_cast<std::size_t>(t[0])];
        const Vec2& p1 = vertices[static_cast<std::size_t>(t[1])];
        const Vec2& p2 = vertices[static_cast<std::size_t>(t[2])];
        double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
        double u0 = nodal[static_cast<std::size_t>(t[0])];
        double u1 = nodal[static_cast<std::size_t>(t[1])];
        double u2 = nodal[static_cast<std::size_t>(t[2])];
        return {((u1 - u0) * (p2.y - p0.y) - (u2 - u0) * (p1.y - p0.y)) / det,
                ((u2 - u0) * (p1.x - p0.x) - (u1 - u0) * (p2.x - p0.x)) / det};
    }

    // Barycentric coordinates of p in a triangle.
    std::array<double, 3> barycentric(int tri, const Vec2& p) const {
        const auto& t = triangles[static_cast<std::size_t>(tri)];
        const Vec2& p0 = vertices[static_cast<std::size_t>(t[0])];
        const Vec2& p1 = vertices[static_cast<std::size_t>(t[1])];
        const Vec2& p2 = vertices[static_cast<std::size_t>(t[2])];
        double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
        double l1 = ((p.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p.y - p0.y)) / det;
        double l2 = ((p1.x - p0.x) * (p.y - p0.y) - (p.x - p0.x) * (p1.y - p0.y)) / det;
        return {1.0 - l1 - l2, l1, l2};
    }

    // Locate the triangle containing p (nearest triangle of the radial band if
    // p sits marginally outside the chordal boundary) and interpolate.
    double interpolate(const Vec2& p, const std::vector<double>& nodal) const {
        auto [tri, lam] = locate(p);
        const auto& t = triangles[static_cast<std::size_t>(tri)];
        return lam[0] * nodal[static_cast<std::size_t>(t[0])] + lam[1] * nodal[static_cast<std::size_t>(t[1])] +
               lam[2] * nodal[static_cast<std::size_t>(t[2])];
    }

    std::pair<int, std::array<double, 3>> locate(const Vec2& p) const {
        double r = p.norm();
        int band = std::clamp(static_cast<int>(std::ceil(r * rings / radius - 1e-12)), 1, rings);
        int best = -1;
        double best_min = -1e300;
        std::array<double, 3> best_lam{};
        for (int pass = 0; pass < 2; ++pass) {
            int lo = pass == 0 ? band_start[static_cast<std::size_t>(band - 1)] : 0;
            int hi = pass == 0 ? band_start[static_cast<std::size_t>(band)] : n_triangles();
            for (int k = lo; k < hi; ++k) {
                auto lam = barycentric(k, p);
                double mn = std::min({lam[0], lam[1], lam[2]});
                if (mn > best_min) {
                    best_min = mn;
                    best = k;
                    best_lam = lam;
                }
                if (mn >= -1e-12) {
                    return {k, lam};
                }
            }
            if (pass == 0 && best_min >= -1e-9) break;  // marginally outside the chordal hull
        }
        if (best < 0) throw std::runtime_error("DiskMesh::locate failed");
        // Clamp to the closest triangle: project negative coordinates away.
        for (double& l : best_lam) l = std::max(l, 0.0);
        double s = best_lam[0] + best_lam[1] + best_lam[2];
        for (double& l : best_lam) l /= s;
        return {best, best_lam};
    }
};

inline DiskMesh make_disk_mesh(double radius, int rings) {
    if (rings < 2) throw std::invalid_argument("make_disk_mesh: need at least 2 rings");
    DiskMesh m;
    m.radius = radius;
    m.rings = rings;
    m.vertices.push_back({0.0, 0.0});
    m.ring_start.assign(static_cast<std::size_t>(rings) + 1, 0);
    for (int j = 1; j <= rings; ++j) {
        m.ring_start[static_cast<std::size_t>(j)] = m.n_vertices();
        int n = 6 * j;
        double r = radius * j / rings;
        for (int k = 0; k < n; ++k) {
            double th = 2.0 * M_PI * k / n;
            m.vertices.push_back({r * std::cos(th), r * std::sin(th)});
        }
    }
    auto add_tri = [&m](int a, int b, int c) {
        const Vec2& pa = m.vertices[static_cast<std::size_t>(a)];
        const Vec2& pb = m.vertices[static_cast<std::size_t>(b)];
        const Vec2& pc = m.vertices[static_cast<std::size_t>(c)];
        double det = (pb.x - pa.x) * (pc.y - pa.y) - (pc.x - pa.x) * (pb.y - pa.y);
        if (det < 0.0) {
            std::swap(b, c);
            det = -det;
        }
        m.triangles.push_back({a, b, c});
        m.tri_area.push_back(0.5 * det);
    };
    m.band_start.assign(static_cast<std::size_t>(rings) + 1, 0);
    for (int j = 1; j <= rings; ++j) {
        m.band_start[static_cast<std::size_t>(j - 1)] =
            j == 1 ? 0 : m.n_triangles();
        int n_out = 6 * j;
        int out0 = m.ring_start[static_cast<std::size_t>(j)];
        if (j == 1) {
            m.band_start[0] = 0;
            for (int k = 0; k < 6; ++k) add_tri(0, out0 + k, out0 + (k + 1) % 6);
            continue;
        }
        int n_in = 6 * (j - 1);
        int in0 = m.ring_start[static_cast<std::size_t>(j - 1)];
        int ki = 0, ko = 0;
        while (ki < n_in || ko < n_out) {
            bool advance_outer;
            if (ki == n_in)
                advance_outer = true;
            else if (ko == n_out)
                advance_outer = false;
            else
                advance_outer = (static_cast<double>(ko + 1) / n_out <= static_cast<double>(ki + 1) / n_in);
            if (advance_outer) {
                add_tri(out0 + ko % n_out, out0 + (ko + 1) % n_out, in0 + ki % n_in);
                ++ko;
            } else {
                add_tri(in0 + ki % n_in, in0 + (ki + 1) % n_in, out0 + ko % n_out);
                ++ki;
            }
        }
    }
    m.band_start[static_cast<std::size_t>(rings)] = m.n_triangles();
    int nR = 6 * rings;
    int r0 = m.ring_start[static_cast<std::size_t>(rings)];
    for (int k = 0; k < nR; ++k) m.boundary_edges.push_back({r0 + k, r0 + (k + 1) % nR});
    return m;
}

}  // namespace junction
