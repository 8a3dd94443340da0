#pragma once

// Monomial lifting map for Carleman-type embeddings.
//
// A basis of order N over R^d holds every exponent vector alpha with
// 1 <= |alpha| <= N, graded by total degree and, within one degree,
// lexicographic with coordinate 1 most significant (x1^2, x1 x2, ..., x2^2).
// The first d entries are always x1..xd, so truncating a lifted vector to
// its first d components recovers the state.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace carlid {

struct MultiIndex {
    std::vector<unsigned> exponents;

    std::size_t dim() const noexcept { return exponents.size(); }
    unsigned degree() const noexcept {
        return std::accumulate(exponents.begin(), exponents.end(), 0u);
    }

    auto operator<=>(const MultiIndex&) const = default;
    bool operator==(const MultiIndex&) const = default;
};

inline std::string to_string(const MultiIndex& a) {
    std::string s;
    for (std::size_t j = 0; j < a.exponents.size(); ++j) {
        if (j) s += ' ';
        s += std::to_string(a.exponents[j]);
    }
    return s;
}

/// x^e by repeated squaring.
inline double ipow(double x, unsigned e) noexcept {
    double result = 1.0;
    while (e) {
        if (e & 1u) result *= x;
        x *= x;
        e >>= 1u;
    }
    return result;
}

class LiftingBasis {
public:
    LiftingBasis() = default;

    LiftingBasis(std::size_t d, unsigned order) : d_(d), order_(order) {
        if (d == 0) throw std::invalid_argument("lifting basis needs d >= 1");
        if (order == 0) throw std::invalid_argument("lifting basis needs N >= 1");
        std::vector<unsigned> scratch(d, 0);
        for (unsigned k = 1; k <= order; ++k) enumerate_degree(0, k, scratch);
    }

    std::size_t dim() const noexcept { return d_; }
    unsigned order() const noexcept { return order_; }
    std::size_t size() const noexcept { return indices_.size(); }
    const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
    const MultiIndex& operator[](std::size_t k) const { return indices_[k]; }

    /// Position of alpha in the basis, or size() if alpha is not a member.
    std::size_t find(const MultiIndex& alpha) const {
        if (alpha.dim() != d_) return size();
        const unsigned deg = alpha.degree();
        if (deg == 0 || deg > order_) return size();
        // Degree blocks are contiguous; search the block with the
        // descending-lex comparator used to build it.
        auto begin = indices_.begin() + static_cast<std::ptrdiff_t>(block_start(deg));
        auto end = indices_.begin() + static_cast<std::ptrdiff_t>(block_start(deg + 1));
        auto it = std::lower_bound(begin, end, alpha, [](const MultiIndex& a, const MultiIndex& b) {
            return a.exponents > b.exponents;
        });
        if (it != end && *it == alpha) return static_cast<std::size_t>(it - indices_.begin());
        return size();
    }

    bool operator==(const LiftingBasis& other) const {
        return d_ == other.d_ && order_ == other.order_;
    }

private:
    void enumerate_degree(std::size_t j, unsigned remaining, std::vector<unsigned>& cur) {
        if (j + 1 == d_) {
            cur[j] = remaining;
            indices_.push_back(MultiIndex{cur});
            return;
        }
        for (unsigned e = remaining + 1; e-- > 0;) {
            cur[j] = e;
            enumerate_degree(j + 1, remaining - e, cur);
        }
        cur[j] = 0;
    }

    // Number of monomials with 1 <= |alpha| < deg.
    std::size_t block_start(unsigned deg) const {
        std::size_t count = 0;
        for (unsigned k = 1; k < deg; ++k) count += monomials_of_degree(d_, k);
        return count;
    }

    static std::size_t monomials_of_degree(std::size_t d, unsigned k) {
        // binomial(k + d - 1, d - 1)
        std::size_t r = 1;
        for (std::size_t i = 1; i < d; ++i) r = r * (k + i) / i;
        return r;
    }

    std::size_t d_ = 0;
    unsigned order_ = 0;
    std::vector<MultiIndex> indices_;
};

inline LiftingBasis build_basis(std::size_t d, unsigned order) { return LiftingBasis(d, order); }

/// binomial(d + N, N) - 1
inline std::size_t lifted_dimension(std::size_t d, unsigned order) {
    std::size_t r = 1;
    for (std::size_t i = 1; i <= order; ++i) r = r * (d + i) / i;
    return r - 1;
}

inline Eigen::VectorXd lift(const LiftingBasis& basis, std::span<const double> x) {
    const std::size_t d = basis.dim();
    if (x.size() != d)
        throw DimensionError("lift: state has length " + std::to_string(x.size()) +
                             ", basis expects " + std::to_string(d));
    const unsigned order = basis.order();
    std::vector<double> powers(d * (order + 1));
    for (std::size_t j = 0; j < d; ++j)
        for (unsigned e = 0; e <= order; ++e) powers[j * (order + 1) + e] = ipow(x[j], e);

    Eigen::VectorXd z(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const auto& exps = basis[k].exponents;
        double v = 1.0;
        for (std::size_t j = 0; j < d; ++j)
            if (exps[j]) v *= powers[j * (order + 1) + exps[j]];
        z[static_cast<Eigen::Index>(k)] = v;
    }
    return z;
}

inline Eigen::VectorXd lift(const LiftingBasis& basis, const Eigen::VectorXd& x) {
    return lift(basis, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

/// Lifts every row of a (samples x d) state matrix; result is (lifted dim x samples).
inline Eigen::MatrixXd lift_rows(const LiftingBasis& basis, const Eigen::MatrixXd& states) {
    if (static_cast<std::size_t>(states.cols()) != basis.dim())
        throw DimensionError("lift_rows: state matrix has wrong column count");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(basis.size()), states.rows());
    Eigen::VectorXd row(states.cols());
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
        row = states.row(i).transpose();
        out.col(i) = lift(basis, row);
    }
    return out;
}

inline Eigen::VectorXd truncate_to_d(const LiftingBasis& basis, const Eigen::VectorXd& z) {
    if (static_cast<std::size_t>(z.size()) != basis.size())
        throw DimensionError("truncate_to_d: lifted vector has length " + std::to_string(z.size()) +
                             ", basis has " + std::to_string(basis.size()));
    return z.head(static_cast<Eigen::Index>(basis.dim()));
}

}  // namespace carlid
