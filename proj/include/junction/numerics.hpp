#pragma once

// Small numeric utilities shared across the library: Gauss-Legendre rules,
// composite quadrature over segment lists, least-squares line fits, and a
// tridiagonal solver.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace junction {

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

// Gauss-Legendre nodes/weights on [-1, 1], computed by Newton iteration on
// the Legendre recurrence. Cached per order.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline const GaussRule& gauss_legendre(int n) {
    static thread_local std::vector<GaussRule> cache(65);
    if (n < 1 || n > 64) throw std::invalid_argument("gauss_legendre: order out of range");
    GaussRule& rule = cache[static_cast<std::size_t>(n)];
    if (!rule.nodes.empty()) return rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            if (n == 1) p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        rule.nodes[static_cast<std::size_t>(i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

// Composite Gauss quadrature of f over [a, b] split into `panels` equal panels.
inline double integrate_gauss(const std::function<double(double)>& f, double a, double b,
                              int panels = 16, int order = 8) {
    if (b <= a) return 0.0;
    const GaussRule& rule = gauss_legendre(order);
    double sum = 0.0;
    double w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * w;
        double mid = lo + 0.5 * w;
        double half = 0.5 * w;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
            sum += rule.weights[q] * half * f(mid + half * rule.nodes[q]);
    }
    return sum;
}

// Quadrature nodes/weights for a composite rule over a list of segments,
// `panels_per_segment` Gauss panels in each. Used by the residual norms so
// every cut-off band gets its own resolved panel set.
struct Quadrature1D {
    std::vector<double> x;
    std::vector<double> w;
};

inline Quadrature1D make_quadrature(const std::vector<std::pair<double, double>>& segments,
                                    int panels_per_segment, int order = 4) {
    Quadrature1D q;
    const GaussRule& rule = gauss_legendre(order);
    for (const auto& [a, b] : segments) {
        if (b <= a) continue;
        double w = (b - a) / panels_per_segment;
        for (int p = 0; p < panels_per_segment; ++p) {
            double mid = a + (p + 0.5) * w;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                q.x.push_back(mid + 0.5 * w * rule.nodes[i]);
                q.w.push_back(0.5 * w * rule.weights[i]);
            }
        }
    }
    return q;
}

// Least-squares line y = intercept + slope * x; returns correlation as well.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double correlation = 0.0;  // Pearson r
    double rms_residual = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.correlation = (syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 1.0;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / n);
    return fit;
}

// Thomas algorithm for a tridiagonal system; diagonals (lower, diag, upper).
inline std::vector<double> solve_tridiagonal(std::vector<double> lower, std::vector<double> diag,
                                             std::vector<double> upper, std::vector<double> rhs) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n)
        throw std::invalid_argument("solve_tridiagonal: size mismatch");
    for (std::size_t i = 1; i < n; ++i) {
        double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
    return x;
}

// Bernoulli function B(t) = t / (e^t - 1), stable near t = 0 and for large |t|.
inline double bernoulli_fn(double t) {
    if (std::abs(t) < 1e-8) return 1.0 - 0.5 * t + t * t / 12.0;
    if (t > 0.0) {
        if (t > 700.0) return 0.0;
        return t * std::exp(-t) / (1.0 - std::exp(-t));
    }
    if (t < -700.0) return -t;
    return t / std::expm1(t);
}

inline double sqr(double v) { return v * v; }

}  // namespace junction
