#pragma once

// Config-level function forms. Scalar profiles of the axial variable come in
// a handful of named shapes (constant, polynomial density on a support
// interval, C-inf bump, C-inf step/ramp, raw samples); transverse fields and
// diffusion matrix entries are polynomials in the fast variables so that
// divergences and boundary traces needed by the residual formulas are exact.

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "junction/edge_function.hpp"
#include "junction/smooth_profiles.hpp"

namespace junction {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// 1D scalar forms
// ---------------------------------------------------------------------------

struct ScalarForm {
    enum class Kind { Zero, Constant, Polynomial, Bump, SmoothStep, SmoothRamp, Samples };

    Kind kind = Kind::Zero;
    double value = 0.0;                    // Constant
    std::vector<double> coeffs;            // Polynomial (ascending powers of x)
    double a = 0.0, b = 0.0;               // support / transition interval
    double from = 0.0, to = 0.0;           // SmoothStep
    double base = 0.0, slope = 0.0;        // SmoothRamp
    std::vector<double> sample_values;     // Samples

    double eval(double x) const {
        switch (kind) {
            case Kind::Zero: return 0.0;
            case Kind::Constant: return value;
            case Kind::Polynomial: {
                if (x < a || x > b) return 0.0;
                double p = 0.0;
                for (std::size_t i = coeffs.size(); i-- > 0;) p = p * x + coeffs[i];
                return p;
            }
            case Kind::Bump: return smooth_bump(x, a, b, value);
            case Kind::SmoothStep: return from + (to - from) * smooth_step((x - a) / (b - a));
            case Kind::SmoothRamp:
                return base + slope * (b - a) * smooth_step_antiderivative((x - a) / (b - a));
            case Kind::Samples: throw ConfigError("samples form must be materialized via to_edge_function");
        }
        return 0.0;
    }

    bool has_exact_antiderivative() const {
        return kind == Kind::Zero || kind == Kind::Constant || kind == Kind::Polynomial;
    }

    // F(x) = int_0^x eval, defined where has_exact_antiderivative().
    double antiderivative(double x) const {
        switch (kind) {
            case Kind::Zero: return 0.0;
            case Kind::Constant: return value * x;
            case Kind::Polynomial: {
                auto prim = [&](double t) {
                    double p = 0.0;
                    for (std::size_t i = coeffs.size(); i-- > 0;)
                        p = p * t + coeffs[i] / static_cast<double>(i + 1);
                    return p * t;
                };
                if (x <= a) return 0.0;
                double hi = std::min(x, b);
                return prim(hi) - prim(a);
            }
            default: throw ConfigError("no exact antiderivative for this form");
        }
    }

    std::optional<std::pair<double, double>> support() const {
        if (kind == Kind::Zero) return std::make_pair(0.0, 0.0);
        if (kind == Kind::Polynomial || kind == Kind::Bump) return std::make_pair(a, b);
        return std::nullopt;
    }

    EdgeFunction to_edge_function(double length, std::size_t n_per_unit = 512) const {
        EdgeFunction f = (kind == Kind::Samples)
                             ? EdgeFunction(length, sample_values)
                             : EdgeFunction::sample(length, [this](double x) { return eval(x); }, n_per_unit);
        if (auto s = support()) f.set_support(s->first, s->second);
        if (has_exact_antiderivative()) {
            ScalarForm copy = *this;
            f.set_exact_antiderivative([copy](double x) { return copy.antiderivative(x); });
        }
        return f;
    }
};

inline ScalarForm parse_scalar_form(const json& j, const std::string& where) {
    ScalarForm f;
    if (j.is_number()) {
        f.kind = ScalarForm::Kind::Constant;
        f.value = j.get<double>();
        return f;
    }
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError(where + ": expected a number or an object with a 'type' field");
    const std::string type = j.at("type").get<std::string>();
    auto need = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw ConfigError(where + ": form '" + type + "' requires field '" + key + "'");
        return j.at(key);
    };
    if (type == "zero") {
        f.kind = ScalarForm::Kind::Zero;
    } else if (type == "constant") {
        f.kind = ScalarForm::Kind::Constant;
        f.value = need("value").get<double>();
    } else if (type == "polynomial") {
        f.kind = ScalarForm::Kind::Polynomial;
        f.coeffs = need("coeffs").get<std::vector<double>>();
        auto s = need("support").get<std::vector<double>>();
        if (s.size() != 2 || s[0] >= s[1]) throw ConfigError(where + ": support must be [a, b] with a < b");
        f.a = s[0];
        f.b = s[1];
    } else if (type == "bump") {
        f.kind = ScalarForm::Kind::Bump;
        f.value = need("amplitude").get<double>();
        auto s = need("support").get<std::vector<double>>();
        if (s.size() != 2 || s[0] >= s[1]) throw ConfigError(where + ": support must be [a, b] with a < b");
        f.a = s[0];
        f.b = s[1];
    } else if (type == "smoothstep") {
        f.kind = ScalarForm::Kind::SmoothStep;
        f.from = need("from").get<double>();
        f.to = need("to").get<double>();
        f.a = need("x0").get<double>();
        f.b = need("x1").get<double>();
    } else if (type == "smoothramp") {
        f.kind = ScalarForm::Kind::SmoothRamp;
        f.base = need("base").get<double>();
        f.slope = need("slope").get<double>();
        f.a = need("x0").get<double>();
        f.b = need("x1").get<double>();
    } else if (type == "samples") {
        f.kind = ScalarForm::Kind::Samples;
        f.sample_values = need("values").get<std::vector<double>>();
    } else {
        throw ConfigError(where + ": unknown form type '" + type + "'");
    }
    return f;
}

// ---------------------------------------------------------------------------
// Polynomials in two / three fast variables
// ---------------------------------------------------------------------------

struct Poly2 {
    // coeffs[i][j] * s^i * t^j
    std::vector<std::vector<double>> coeffs;

    static Poly2 constant(double c) { return Poly2{{{c}}}; }

    double eval(double s, double t) const {
        double acc = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 0;) {
            double row = 0.0;
            for (std::size_t j = coeffs[i].size(); j-- > 0;) row = row * t + coeffs[i][j];
            acc = acc * s + row;
        }
        return acc;
    }

    double ds(double s, double t) const {
        double acc = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 1;) {
            double row = 0.0;
            for (std::size_t j = coeffs[i].size(); j-- > 0;) row = row * t + coeffs[i][j];
            acc = acc * s + row * static_cast<double>(i);
        }
        return acc;
    }

    double dt(double s, double t) const {
        double acc = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 0;) {
            double row = 0.0;
            for (std::size_t j = coeffs[i].size(); j-- > 1;) row = row * t + coeffs[i][j] * static_cast<double>(j);
            acc = acc * s + row;
        }
        return acc;
    }

    bool is_zero() const {
        for (const auto& row : coeffs)
            for (double c : row)
                if (c != 0.0) return false;
        return true;
    }
};

inline Poly2 parse_poly2(const json& j, const std::string& where) {
    if (j.is_number()) return Poly2::constant(j.get<double>());
    if (j.is_object() && j.contains("coeffs"))
        return Poly2{j.at("coeffs").get<std::vector<std::vector<double>>>()};
    throw ConfigError(where + ": expected a number or {coeffs: [[...]]}");
}

struct Poly3 {
    // coeffs[i][j][k] * x^i * y^j * z^k
    std::vector<std::vector<std::vector<double>>> coeffs;

    static Poly3 constant(double c) { return Poly3{{{{c}}}}; }

    double eval(double x, double y, double z) const {
        double acc = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 0;) {
            double plane = 0.0;
            for (std::size_t jj = coeffs[i].size(); jj-- > 0;) {
                double row = 0.0;
                for (std::size_t k = coeffs[i][jj].size(); k-- > 0;) row = row * z + coeffs[i][jj][k];
                plane = plane * y + row;
            }
            acc = acc * x + plane;
        }
        return acc;
    }

    bool is_zero() const {
        for (const auto& plane : coeffs)
            for (const auto& row : plane)
                for (double c : row)
                    if (c != 0.0) return false;
        return true;
    }
};

inline Poly3 parse_poly3(const json& j, const std::string& where) {
    if (j.is_number()) return Poly3::constant(j.get<double>());
    if (j.is_object() && j.contains("coeffs"))
        return Poly3{j.at("coeffs").get<std::vector<std::vector<std::vector<double>>>>()};
    throw ConfigError(where + ": expected a number or {coeffs: [[[...]]]}");
}

// Symmetric 2x2 matrix field of the fast cross-section variables.
struct MatrixField2 {
    Poly2 a11 = Poly2::constant(1.0);
    Poly2 a12 = Poly2::constant(0.0);
    Poly2 a22 = Poly2::constant(1.0);

    static MatrixField2 isotropic(double a) {
        return MatrixField2{Poly2::constant(a), Poly2::constant(0.0), Poly2::constant(a)};
    }

    void eval(double s, double t, double out[2][2]) const {
        out[0][0] = a11.eval(s, t);
        out[0][1] = out[1][0] = a12.eval(s, t);
        out[1][1] = a22.eval(s, t);
    }
};

inline MatrixField2 parse_matrix2(const json& j, const std::string& where) {
    MatrixField2 m;
    if (j.is_number()) return MatrixField2::isotropic(j.get<double>());
    if (!j.is_object()) throw ConfigError(where + ": expected a number (isotropic) or {a11, a12, a22}");
    if (j.contains("a11")) m.a11 = parse_poly2(j.at("a11"), where + ".a11");
    if (j.contains("a12")) m.a12 = parse_poly2(j.at("a12"), where + ".a12");
    if (j.contains("a22")) m.a22 = parse_poly2(j.at("a22"), where + ".a22");
    return m;
}

// Symmetric 3x3 matrix field on the node.
struct MatrixField3 {
    Poly3 entries[3][3];

    MatrixField3() {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) entries[i][j] = Poly3::constant(i == j ? 1.0 : 0.0);
    }

    static MatrixField3 isotropic(double a) {
        MatrixField3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m.entries[i][j] = Poly3::constant(i == j ? a : 0.0);
        return m;
    }

    void eval(double x, double y, double z, double out[3][3]) const {
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) out[i][j] = out[j][i] = entries[i][j].eval(x, y, z);
    }
};

inline MatrixField3 parse_matrix3(const json& j, const std::string& where) {
    if (j.is_number()) return MatrixField3::isotropic(j.get<double>());
    if (!j.is_object()) throw ConfigError(where + ": expected a number (isotropic) or {a11..a33}");
    MatrixField3 m;
    const char* keys[3][3] = {{"a11", "a12", "a13"}, {"a12", "a22", "a23"}, {"a13", "a23", "a33"}};
    for (int i = 0; i < 3; ++i)
        for (int jj = i; jj < 3; ++jj)
            if (j.contains(keys[i][jj]))
                m.entries[i][jj] = m.entries[jj][i] = parse_poly3(j.at(keys[i][jj]), where + "." + keys[i][jj]);
    return m;
}

}  // namespace junction
