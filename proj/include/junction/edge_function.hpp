#pragma once

// Scalar functions of the axial edge variable, represented as not-a-knot
// cubic splines on a uniform grid over [0, length]. All axial coefficients of
// the expansion (sources, velocities, limit solution, higher-order terms) use
// this representation; derivatives come from the spline, and integrals are
// exact per spline piece. Forms with a closed-form antiderivative can attach
// it so that integration bypasses the spline entirely.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "junction/numerics.hpp"

namespace junction {

class EdgeFunction {
public:
    EdgeFunction() = default;

    // Spline through uniformly spaced samples on [0, length].
    EdgeFunction(double length, std::vector<double> samples) : length_(length), y_(std::move(samples)) {
        if (length_ <= 0.0) throw std::invalid_argument("EdgeFunction: length must be positive");
        if (y_.size() < 8) throw std::invalid_argument("EdgeFunction: need at least 8 samples");
        h_ = length_ / static_cast<double>(y_.size() - 1);
        build();
    }

    static EdgeFunction sample(double length, const std::function<double(double)>& f,
                               std::size_t n_per_unit = 512) {
        std::size_t n = std::max<std::size_t>(16, static_cast<std::size_t>(n_per_unit * length) + 1);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = f(length * static_cast<double>(i) / static_cast<double>(n - 1));
        return EdgeFunction(length, std::move(y));
    }

    static EdgeFunction constant(double length, double value, std::size_t n_per_unit = 512) {
        return sample(length, [value](double) { return value; }, n_per_unit);
    }

    double length() const { return length_; }
    double grid_step() const { return h_; }
    std::size_t size() const { return y_.size(); }
    const std::vector<double>& samples() const { return y_; }

    void set_support(double lo, double hi) { support_ = {lo, hi}; }
    const std::optional<std::pair<double, double>>& support() const { return support_; }
    bool compactly_supported() const { return support_.has_value(); }

    void set_exact_antiderivative(std::function<double(double)> F) { exact_antiderivative_ = std::move(F); }

    double operator()(double x) const { return eval(x); }

    double eval(double x) const {
        if (outside_support(x)) return 0.0;
        auto [i, t] = locate(x);
        double a = y_[i], b = y_[i + 1];
        double u = 1.0 - t;
        return u * a + t * b + h_ * h_ / 6.0 * (m_[i] * (u * u * u - u) + m_[i + 1] * (t * t * t - t));
    }

    double deriv1(double x) const {
        if (outside_support(x)) return 0.0;
        auto [i, t] = locate(x);
        double u = 1.0 - t;
        return (y_[i + 1] - y_[i]) / h_ + h_ / 6.0 * (m_[i] * (1.0 - 3.0 * u * u) + m_[i + 1] * (3.0 * t * t - 1.0));
    }

    double deriv2(double x) const {
        if (outside_support(x)) return 0.0;
        auto [i, t] = locate(x);
        return m_[i] * (1.0 - t) + m_[i + 1] * t;
    }

    // int_0^x of the function. Exact for the attached antiderivative when one
    // exists, otherwise exact per spline piece.
    double integral(double x) const {
        if (exact_antiderivative_) return exact_antiderivative_(std::clamp(x, 0.0, length_));
        double xc = std::clamp(x, 0.0, length_);
        auto [i, t] = locate(xc);
        return cum_[i] + piece_integral(i, t);
    }

    double integral_full() const { return integral(length_); }

private:
    bool outside_support(double x) const {
        return support_ && (x < support_->first || x > support_->second);
    }

    std::pair<std::size_t, double> locate(double x) const {
        double s = x / h_;
        auto i = static_cast<std::ptrdiff_t>(std::floor(s));
        i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(y_.size()) - 2);
        return {static_cast<std::size_t>(i), s - static_cast<double>(i)};
    }

    // Second derivatives at the knots, not-a-knot end conditions. The end
    // conditions make the first and last two pieces single cubics, which
    // decouples m_[1] and m_[n-2] into plain second differences.
    void build() {
        const std::size_t n = y_.size();
        m_.assign(n, 0.0);
        auto d2 = [&](std::size_t i) { return (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]) / (h_ * h_); };
        m_[1] = d2(1);
        m_[n - 2] = d2(n - 2);
        if (n > 4) {
            const std::size_t k = n - 4;  // unknowns m_[2..n-3]
            std::vector<double> lo(k, 0.25), di(k, 1.0), up(k, 0.25), rhs(k);
            for (std::size_t j = 0; j < k; ++j) rhs[j] = 1.5 * d2(j + 2);
            rhs[0] -= 0.25 * m_[1];
            rhs[k - 1] -= 0.25 * m_[n - 2];
            lo[0] = 0.0;
            up[k - 1] = 0.0;
            auto sol = solve_tridiagonal(lo, di, up, rhs);
            for (std::size_t j = 0; j < k; ++j) m_[j + 2] = sol[j];
        }
        m_[0] = 2.0 * m_[1] - m_[2];
        m_[n - 1] = 2.0 * m_[n - 2] - m_[n - 3];

        cum_.assign(n - 1, 0.0);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            cum_[i] = acc;
            acc += piece_integral(i, 1.0);
        }
        cum_.push_back(acc);
    }

    double piece_integral(std::size_t i, double t) const {
        double u = 1.0 - t;
        double a = y_[i], b = y_[i + 1];
        double lin = h_ * (a * (1.0 - u * u) / 2.0 + b * t * t / 2.0);
        double cub = h_ * h_ * h_ / 6.0 *
                     (m_[i] * ((1.0 - u * u * u * u) / 4.0 - (1.0 - u * u) / 2.0) +
                      m_[i + 1] * (t * t * t * t / 4.0 - t * t / 2.0));
        return lin + cub;
    }

    double length_ = 0.0;
    double h_ = 0.0;
    std::vector<double> y_;
    std::vector<double> m_;
    std::vector<double> cum_;
    std::optional<std::pair<double, double>> support_;
    std::function<double(double)> exact_antiderivative_;
};

}  // namespace junction
