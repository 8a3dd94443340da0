#pragma once

// Realized-error diagnostics for identified models over a range of
// truncation orders: data vs identified, data vs model-based Carleman, and
// model-based vs identified (full lifted state and first d states).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "identify.hpp"
#include "lifting.hpp"
#include "nummat.hpp"
#include "polyflow.hpp"
#include "simulate.hpp"

namespace carlid {

struct DiagnosticsConfig {
    unsigned n_min = 1;
    unsigned n_max = 12;
    Window fit_window{0.0, 10.0};
    double t_cert = 0.2;   // short horizon (certificate horizon)
    double t_sim = 20.0;   // full simulation horizon
    NormKind norm = NormKind::inf;
    double rcond = default_rcond;
    std::vector<unsigned> overlay_orders{2, 5, 11};
    std::size_t overlay_trajectory = 0;
};

/// Every error is max over trajectories of sup over the horizon; +inf once a
/// propagation stops being finite, NaN when the model-based system is unavailable.
struct HorizonErrors {
    double identified = 0.0;   // ||x - zhat|_d||
    double model_based = 0.0;  // ||x - z|_d||
    double full_state = 0.0;   // ||z - zhat||
    double truncated = 0.0;    // ||z|_d - zhat|_d||
};

struct ErrorRow {
    unsigned N = 0;
    std::size_t lifted_dim = 0;
    HorizonErrors cert;  // over [0, t_cert]
    HorizonErrors sim;   // over [0, t_sim]
    bool identified_finite = true;
    bool model_based_finite = true;
    double condition_number = 0.0;
    double residual_norm = 0.0;
    bool full_row_rank = false;
};

/// Time series for one trajectory: truth, identified and model-based, first d states.
struct Overlay {
    unsigned N = 0;
    std::vector<double> t;
    Eigen::MatrixXd truth;        // steps x d
    Eigen::MatrixXd identified;   // steps x d
    Eigen::MatrixXd model_based;  // steps x d (NaN without a field)
};

struct IdentificationRun {
    std::vector<ErrorRow> rows;
    std::vector<IdentifiedModel> models;
    std::vector<Overlay> overlays;
    double horizon = 0.0;  // effective t_sim (capped at the recording when no field is known)
};

namespace detail {

inline double column_sup(const Eigen::MatrixXd& diff, NormKind norm) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < diff.cols(); ++i) s = std::max(s, vector_norm(diff.col(i), norm));
    return s;
}

}  // namespace detail

/// Fits Ahat for every order in the range and measures realized errors.
/// When the true field is known, truth trajectories are re-integrated to
/// t_sim; otherwise the recorded data serve as truth up to their end.
inline IdentificationRun run_identification(const TrajectorySet& data, const std::optional<PolynomialField>& field,
                                            const DiagnosticsConfig& cfg) {
    if (data.empty()) throw std::invalid_argument("run_identification: empty dataset");
    const std::size_t d = data.dim();
    const auto m = static_cast<Eigen::Index>(data.size());
    const double h = data.grid().h;
    const double record_span = data.grid().end() - data.grid().t0;
    const double horizon = field ? cfg.t_sim : std::min(cfg.t_sim, record_span);
    const TimeGrid sim_grid = TimeGrid::covering(0.0, h, horizon);
    const std::size_t cert_last = static_cast<std::size_t>(std::llround(std::min(cfg.t_cert, horizon) / h));

    // truth[k] is d x m at time k h
    std::vector<Eigen::MatrixXd> truth(sim_grid.count, Eigen::MatrixXd(static_cast<Eigen::Index>(d), m));
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& rec = data[static_cast<std::size_t>(i)];
        const Trajectory tr = field ? integrate_field(*field, rec.state(0), sim_grid) : rec;
        for (std::size_t k = 0; k < sim_grid.count; ++k)
            truth[k].col(i) = tr.states.row(static_cast<Eigen::Index>(k)).transpose();
    }

    IdentificationRun run;
    run.horizon = horizon;
    for (unsigned n = cfg.n_min; n <= cfg.n_max; ++n) {
        const LiftingBasis basis(d, n);
        const LiftedDataset lifted = lift_dataset(data, basis, cfg.fit_window);
        IdentifiedModel model = estimate(lifted, cfg.rcond);

        Eigen::MatrixXd z0(static_cast<Eigen::Index>(basis.size()), m);
        for (Eigen::Index i = 0; i < m; ++i) z0.col(i) = lift(basis, data[static_cast<std::size_t>(i)].state(0));

        ErrorRow row;
        row.N = n;
        row.lifted_dim = basis.size();
        row.condition_number = model.condition_number;
        row.residual_norm = model.residual_norm;
        row.full_row_rank = model.full_row_rank;

        std::optional<LinearPropagator> id_prop, mb_prop;
        try {
            id_prop.emplace(model.ahat, h);
        } catch (const NumericalError&) {
            row.identified_finite = false;
        }
        if (field) mb_prop.emplace(carleman_matrix(*field, basis).A, h);
        else row.model_based_finite = false;

        const bool overlay = std::find(cfg.overlay_orders.begin(), cfg.overlay_orders.end(), n) !=
                                 cfg.overlay_orders.end() &&
                             cfg.overlay_trajectory < data.size();
        Overlay ov;
        if (overlay) {
            ov.N = n;
            ov.truth.resize(static_cast<Eigen::Index>(sim_grid.count), static_cast<Eigen::Index>(d));
            ov.identified.resize(ov.truth.rows(), ov.truth.cols());
            ov.model_based.resize(ov.truth.rows(), ov.truth.cols());
        }

        Eigen::MatrixXd zid = z0, zmb = z0;
        const auto dd = static_cast<Eigen::Index>(d);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double inf = std::numeric_limits<double>::infinity();
        HorizonErrors sup{0.0, field ? 0.0 : nan, field ? 0.0 : nan, field ? 0.0 : nan};
        for (std::size_t k = 0; k < sim_grid.count; ++k) {
            if (k > 0) {
                if (row.identified_finite) {
                    id_prop->step(zid);
                    if (!zid.allFinite()) row.identified_finite = false;
                }
                if (row.model_based_finite) {
                    mb_prop->step(zmb);
                    if (!zmb.allFinite()) row.model_based_finite = false;
                }
            }
            const Eigen::MatrixXd& x = truth[k];
            const double e_id = row.identified_finite ? detail::column_sup(x - zid.topRows(dd), cfg.norm) : inf;
            double e_mb = nan, e_full = nan, e_tr = nan;
            if (field) {
                e_mb = row.model_based_finite ? detail::column_sup(x - zmb.topRows(dd), cfg.norm) : inf;
                const bool both = row.identified_finite && row.model_based_finite;
                e_full = both ? detail::column_sup(zmb - zid, cfg.norm) : inf;
                e_tr = both ? detail::column_sup(zmb.topRows(dd) - zid.topRows(dd), cfg.norm) : inf;
            }
            sup.identified = std::max(sup.identified, e_id);
            if (field) {
                sup.model_based = std::max(sup.model_based, e_mb);
                sup.full_state = std::max(sup.full_state, e_full);
                sup.truncated = std::max(sup.truncated, e_tr);
            }
            if (k == cert_last) row.cert = sup;

            if (overlay) {
                const auto ki = static_cast<Eigen::Index>(k);
                const auto col = static_cast<Eigen::Index>(cfg.overlay_trajectory);
                ov.t.push_back(sim_grid.time(k));
                ov.truth.row(ki) = x.col(col).transpose();
                ov.identified.row(ki) = row.identified_finite ? Eigen::RowVectorXd(zid.col(col).head(dd).transpose())
                                                              : Eigen::RowVectorXd::Constant(dd, nan);
                ov.model_based.row(ki) = (field && row.model_based_finite)
                                             ? Eigen::RowVectorXd(zmb.col(col).head(dd).transpose())
                                             : Eigen::RowVectorXd::Constant(dd, nan);
            }
        }
        row.sim = sup;
        run.rows.push_back(row);
        run.models.push_back(std::move(model));
        if (overlay) run.overlays.push_back(std::move(ov));
    }
    return run;
}

}  // namespace carlid
