#pragma once

// Polynomial vector fields xdot = sum_alpha f_alpha x^alpha (constant
// coefficients, no constant term) and their truncated Carleman matrices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "lifting.hpp"

namespace carlid {

class PolynomialField {
public:
    PolynomialField() = default;
    explicit PolynomialField(std::size_t d) : d_(d) {
        if (d == 0) throw std::invalid_argument("polynomial field needs d >= 1");
    }

    /// Adds coeff to the term x^alpha (accumulating if alpha is already present).
    PolynomialField& add_term(const MultiIndex& alpha, const Eigen::VectorXd& coeff) {
        if (alpha.dim() != d_)
            throw DimensionError("term exponent vector has length " + std::to_string(alpha.dim()) +
                                 ", field dimension is " + std::to_string(d_));
        if (static_cast<std::size_t>(coeff.size()) != d_)
            throw DimensionError("term coefficient vector has length " + std::to_string(coeff.size()) +
                                 ", field dimension is " + std::to_string(d_));
        if (alpha.degree() == 0)
            throw std::invalid_argument("constant terms are not allowed (the origin must be an equilibrium)");
        auto [it, inserted] = terms_.try_emplace(alpha, coeff);
        if (!inserted) it->second += coeff;
        return *this;
    }

    std::size_t dim() const noexcept { return d_; }
    const std::map<MultiIndex, Eigen::VectorXd>& terms() const noexcept { return terms_; }
    bool empty() const noexcept { return terms_.empty(); }

    unsigned max_degree() const {
        unsigned m = 0;
        for (const auto& [alpha, c] : terms_) m = std::max(m, alpha.degree());
        return m;
    }
    unsigned min_degree() const {
        unsigned m = ~0u;
        for (const auto& [alpha, c] : terms_) m = std::min(m, alpha.degree());
        return terms_.empty() ? 0 : m;
    }

    Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const {
        if (static_cast<std::size_t>(x.size()) != d_)
            throw DimensionError("evaluate: state has length " + std::to_string(x.size()) +
                                 ", field dimension is " + std::to_string(d_));
        Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_));
        for (const auto& [alpha, c] : terms_) {
            double mono = 1.0;
            for (std::size_t j = 0; j < d_; ++j) mono *= ipow(x[static_cast<Eigen::Index>(j)], alpha.exponents[j]);
            out += mono * c;
        }
        return out;
    }

    /// One-line description, e.g. "f1 = +1*x^(0 1); f2 = -1*x^(0 1) ..."
    std::string describe() const {
        std::string s;
        for (std::size_t i = 0; i < d_; ++i) {
            if (i) s += "; ";
            s += "f" + std::to_string(i + 1) + " =";
            bool any = false;
            for (const auto& [alpha, c] : terms_) {
                const double v = c[static_cast<Eigen::Index>(i)];
                if (v == 0.0) continue;
                s += " " + format_coeff(v) + "*x^(" + to_string(alpha) + ")";
                any = true;
            }
            if (!any) s += " 0";
        }
        return s;
    }

private:
    static std::string format_coeff(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%+g", v);
        return buf;
    }

    std::size_t d_ = 0;
    std::map<MultiIndex, Eigen::VectorXd> terms_;
};

/// The Van der Pol-type field x1' = x2, x2' = -x1 - x2 + x2 x1^2.
inline PolynomialField van_der_pol_field() {
    PolynomialField f(2);
    f.add_term(MultiIndex{{0, 1}}, Eigen::Vector2d(1.0, -1.0));
    f.add_term(MultiIndex{{1, 0}}, Eigen::Vector2d(0.0, -1.0));
    f.add_term(MultiIndex{{2, 1}}, Eigen::Vector2d(0.0, 1.0));
    return f;
}

inline PolynomialField linear_field(const Eigen::MatrixXd& f) {
    if (f.rows() != f.cols()) throw DimensionError("linear_field: matrix must be square");
    const auto d = static_cast<std::size_t>(f.rows());
    PolynomialField field(d);
    for (std::size_t j = 0; j < d; ++j) {
        MultiIndex e{std::vector<unsigned>(d, 0)};
        e.exponents[j] = 1;
        field.add_term(e, f.col(static_cast<Eigen::Index>(j)));
    }
    return field;
}

struct CarlemanMatrix {
    LiftingBasis basis;
    Eigen::MatrixXd A;
};

/// Row for x^beta holds d/dt x^beta = sum_i beta_i x^(beta - e_i) f_i(x)
/// expressed in the basis; monomials of degree above N are dropped.
inline CarlemanMatrix carleman_matrix(const PolynomialField& field, const LiftingBasis& basis) {
    if (field.dim() != basis.dim())
        throw DimensionError("carleman_matrix: field dimension " + std::to_string(field.dim()) +
                             " does not match basis dimension " + std::to_string(basis.dim()));
    const std::size_t d = basis.dim();
    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    MultiIndex gamma{std::vector<unsigned>(d, 0)};
    for (std::size_t row = 0; row < basis.size(); ++row) {
        const auto& beta = basis[row].exponents;
        for (std::size_t i = 0; i < d; ++i) {
            if (beta[i] == 0) continue;
            for (const auto& [alpha, c] : field.terms()) {
                const double ci = c[static_cast<Eigen::Index>(i)];
                if (ci == 0.0) continue;
                for (std::size_t j = 0; j < d; ++j) gamma.exponents[j] = beta[j] + alpha.exponents[j];
                gamma.exponents[i] -= 1;
                const std::size_t col = basis.find(gamma);
                if (col == basis.size()) continue;  // degree > N: truncated
                a(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += beta[i] * ci;
            }
        }
    }
    return CarlemanMatrix{basis, std::move(a)};
}

struct DecayConstants {
    double C = 0.0;
    double R = 0.0;
};

/// Per-degree coefficient sums s_n = sum_{|alpha| = n} ||f_alpha||_inf, index n = 0..max degree.
inline std::vector<double> degree_sums(const PolynomialField& field) {
    std::vector<double> s(field.max_degree() + 1, 0.0);
    for (const auto& [alpha, c] : field.terms()) s[alpha.degree()] += c.cwiseAbs().maxCoeff();
    return s;
}

/// True when s_n <= C R^-n holds for every degree carried by the field.
inline bool satisfies_decay(const PolynomialField& field, DecayConstants k, double rel_tol = 1e-12) {
    const auto s = degree_sums(field);
    for (std::size_t n = 0; n < s.size(); ++n)
        if (s[n] > k.C * std::pow(k.R, -static_cast<double>(n)) * (1.0 + rel_tol)) return false;
    return true;
}

/// Heuristic (C, R) for the exponential decay property.
///
/// Scans 1000 log-spaced R in [1e-2, 1e3], sets C(R) = max_n s_n R^n, and keeps
/// the R that minimises C/R (the cap on C0); ties go to the larger R, which
/// loosens the M < R/e requirement.
inline DecayConstants decay_constants_hint(const PolynomialField& field) {
    if (field.empty()) throw std::invalid_argument("decay_constants_hint: field has no terms");
    const auto s = degree_sums(field);
    bool nonzero = false;
    for (double v : s) nonzero = nonzero || v > 0.0;
    if (!nonzero) throw std::invalid_argument("decay_constants_hint: field is identically zero");

    constexpr int points = 1000;
    const double lo = std::log(1e-2), hi = std::log(1e3);
    DecayConstants best;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int k = 0; k < points; ++k) {
        const double r = std::exp(lo + (hi - lo) * k / (points - 1));
        double c = 0.0;
        for (std::size_t n = 0; n < s.size(); ++n) c = std::max(c, s[n] * std::pow(r, static_cast<double>(n)));
        const double ratio = c / r;
        if (ratio <= best_ratio * (1.0 + 1e-12)) {
            best_ratio = std::min(best_ratio, ratio);
            best = {c, r};
        }
    }
    return best;
}

}  // namespace carlid
