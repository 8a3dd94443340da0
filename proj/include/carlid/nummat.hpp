#pragma once

// Dense linear algebra used by identification and certification.
// Everything is SVD based; no iterative eigensolvers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "errors.hpp"

namespace carlid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class NormKind { inf, two };

inline std::string_view to_string(NormKind k) { return k == NormKind::inf ? "inf" : "two"; }

inline NormKind parse_norm(std::string_view s) {
    if (s == "inf") return NormKind::inf;
    if (s == "two" || s == "2") return NormKind::two;
    throw std::invalid_argument("unknown norm kind '" + std::string(s) + "' (expected inf or two)");
}

inline constexpr double default_rcond = 1e-10;
inline constexpr double gram_condition_limit = 1e12;

inline double vector_norm(const Vector& v, NormKind kind) {
    if (v.size() == 0) return 0.0;
    return kind == NormKind::inf ? v.cwiseAbs().maxCoeff() : v.norm();
}

inline double induced_norm(const Matrix& m, NormKind kind) {
    if (m.size() == 0) return 0.0;
    if (kind == NormKind::inf) return m.cwiseAbs().rowwise().sum().maxCoeff();
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

/// Moore-Penrose pseudo-inverse; singular values below rcond * sigma_max are dropped.
inline Matrix pinv(const Matrix& m, double rcond = default_rcond) {
    if (m.size() == 0) return Matrix(m.cols(), m.rows());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("pinv: SVD did not converge");
    const Vector& s = svd.singularValues();
    const double cutoff = rcond * s(0);
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

struct RankInfo {
    Eigen::Index rank = 0;
    double condition = std::numeric_limits<double>::infinity();  // sigma_max / sigma_min
};

inline RankInfo rank_info(const Matrix& m, double rcond = default_rcond) {
    RankInfo info;
    if (m.size() == 0) return info;
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    const double cutoff = rcond * s(0);
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff && s(i) > 0.0) ++info.rank;
    const double smin = s(s.size() - 1);
    info.condition = smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
    return info;
}

/// Matrix exponential (Pade-13 scaling and squaring, Eigen's MatrixFunctions).
inline Matrix expm(const Matrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("expm: matrix must be square");
    if (!m.allFinite()) throw NumericalError("expm: non-finite input");
    Matrix e = m.exp();
    if (!e.allFinite()) throw NumericalError("expm: overflow (input norm too large)");
    return e;
}

/// ||(M^T M)^{-1}|| in the requested induced norm.
/// Fails when cond(M^T M) exceeds gram_condition_limit.
inline double gram_inverse_norm(const Matrix& m, NormKind kind) {
    if (m.size() == 0) throw DimensionError("gram_inverse_norm: empty matrix");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double smax = s(0);
    const double smin = m.rows() >= m.cols() ? s(s.size() - 1) : 0.0;
    const double cond = smin > 0.0 ? (smax / smin) * (smax / smin)
                                   : std::numeric_limits<double>::infinity();
    if (!(cond <= gram_condition_limit))
        throw RankDeficiencyError("Gram matrix is numerically singular (condition " +
                                      std::to_string(cond) + ")",
                                  cond);
    if (kind == NormKind::two) return 1.0 / (smin * smin);
    const Matrix& v = svd.matrixV();
    Vector inv_sq = s.array().square().inverse();
    Matrix gram_inv = v * inv_sq.asDiagonal() * v.transpose();
    return induced_norm(gram_inv, NormKind::inf);
}

}  // namespace carlid
