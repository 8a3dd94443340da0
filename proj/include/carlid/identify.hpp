#pragma once

// Integrated least-squares identification of a lifted linear model.
//
// Orientation: rows are lifted coordinates, columns are trajectories (or
// trajectory windows). For a window [s, s+T] the regression is
//
//     Gamma(s+T) - Gamma(s) = Ahat * integral_s^{s+T} Gamma(t) dt
//
// solved with a right pseudo-inverse of the integral matrix.

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "lifting.hpp"
#include "nummat.hpp"
#include "simulate.hpp"

namespace carlid {

struct Window {
    double start = 0.0;
    double end = 0.0;
    double length() const noexcept { return end - start; }
};

struct LiftedDataset {
    LiftingBasis basis;
    Eigen::MatrixXd gamma0;   // lifted states at window start, one column per sample
    Eigen::MatrixXd gammaT;   // lifted states at window end
    Eigen::MatrixXd igamma;   // trapezoid integrals of the lifted states over the window
    std::vector<Window> windows;  // window of each column

    Eigen::Index columns() const noexcept { return gamma0.cols(); }
    Eigen::MatrixXd increments() const { return gammaT - gamma0; }
};

namespace detail {

inline std::pair<std::size_t, std::size_t> window_indices(const TimeGrid& grid, Window w) {
    if (!(w.end > w.start)) throw std::invalid_argument("identification window needs end > start");
    const auto a = grid.index_of(w.start);
    const auto b = grid.index_of(w.end);
    if (!a || !b)
        throw std::invalid_argument("identification window [" + std::to_string(w.start) + ", " +
                                    std::to_string(w.end) + "] does not lie on the recording grid");
    return {*a, *b};
}

}  // namespace detail

/// Lifts each trajectory on the window and integrates with the composite trapezoid rule.
inline LiftedDataset lift_dataset(const TrajectorySet& data, const LiftingBasis& basis, Window window) {
    if (data.empty()) throw std::invalid_argument("lift_dataset: empty trajectory set");
    if (data.dim() != basis.dim())
        throw DimensionError("lift_dataset: data dimension " + std::to_string(data.dim()) +
                             " does not match basis dimension " + std::to_string(basis.dim()));
    const auto [first, last] = detail::window_indices(data.grid(), window);
    const double h = data.grid().h;
    const auto rows = static_cast<Eigen::Index>(basis.size());
    const auto m = static_cast<Eigen::Index>(data.size());

    LiftedDataset out{basis, Eigen::MatrixXd(rows, m), Eigen::MatrixXd(rows, m), Eigen::MatrixXd(rows, m),
                      std::vector<Window>(data.size(), window)};
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& traj = data[static_cast<std::size_t>(i)];
        const Eigen::MatrixXd lifted =
            lift_rows(basis, traj.states.middleRows(static_cast<Eigen::Index>(first),
                                                   static_cast<Eigen::Index>(last - first + 1)));
        const Eigen::Index n = lifted.cols();
        out.gamma0.col(i) = lifted.col(0);
        out.gammaT.col(i) = lifted.col(n - 1);
        out.igamma.col(i) = h * (lifted.rowwise().sum() - 0.5 * (lifted.col(0) + lifted.col(n - 1)));
    }
    return out;
}

/// Column-wise concatenation of one lifted dataset per window.
inline LiftedDataset multi_window_augment(const TrajectorySet& data, const LiftingBasis& basis,
                                          const std::vector<Window>& windows) {
    if (windows.empty()) throw std::invalid_argument("multi_window_augment: no windows given");
    std::vector<LiftedDataset> parts;
    parts.reserve(windows.size());
    Eigen::Index total = 0;
    for (const auto& w : windows) {
        parts.push_back(lift_dataset(data, basis, w));
        total += parts.back().columns();
    }
    const auto rows = static_cast<Eigen::Index>(basis.size());
    LiftedDataset out{basis, Eigen::MatrixXd(rows, total), Eigen::MatrixXd(rows, total),
                      Eigen::MatrixXd(rows, total), {}};
    Eigen::Index at = 0;
    for (auto& p : parts) {
        const Eigen::Index c = p.columns();
        out.gamma0.middleCols(at, c) = p.gamma0;
        out.gammaT.middleCols(at, c) = p.gammaT;
        out.igamma.middleCols(at, c) = p.igamma;
        out.windows.insert(out.windows.end(), p.windows.begin(), p.windows.end());
        at += c;
    }
    return out;
}

struct IdentifiedModel {
    LiftingBasis basis;
    Eigen::MatrixXd ahat;
    Window window;               // window of the first column; all columns when single-window
    double condition_number = 0.0;  // sigma_max / sigma_min of the integral matrix
    double residual_norm = 0.0;     // ||increments - Ahat * igamma||_F
    Eigen::Index rank = 0;
    bool full_row_rank = false;  // false: not certifiable downstream
};

inline double fit_residual(const LiftedDataset& data, const Eigen::MatrixXd& ahat) {
    return (data.increments() - ahat * data.igamma).norm();
}

/// Ahat = (GammaT - Gamma0) * pinv(IGamma). A row-rank-deficient integral matrix
/// still yields a model, flagged as not certifiable.
inline IdentifiedModel estimate(const LiftedDataset& data, double rcond = default_rcond) {
    if (data.columns() < 1) throw std::invalid_argument("estimate: dataset has no columns");
    const auto rows = static_cast<Eigen::Index>(data.basis.size());
    if (data.gamma0.rows() != rows || data.gammaT.rows() != rows || data.igamma.rows() != rows ||
        data.gammaT.cols() != data.columns() || data.igamma.cols() != data.columns())
        throw DimensionError("estimate: lifted dataset matrices have inconsistent shapes");

    IdentifiedModel model;
    model.basis = data.basis;
    model.window = data.windows.empty() ? Window{} : data.windows.front();
    model.ahat = data.increments() * pinv(data.igamma, rcond);
    const RankInfo info = rank_info(data.igamma, rcond);
    model.rank = info.rank;
    model.full_row_rank = info.rank == rows;
    model.condition_number = info.condition;
    model.residual_norm = fit_residual(data, model.ahat);
    return model;
}

}  // namespace carlid
