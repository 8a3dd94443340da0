#pragma once

// A-priori trajectory error certificates for identified lifted models.
//
// The certified bound at truncation order N over [0, tau*] is
//
//     Theta(N) = D mu^N + tau* * Bbar * zbar * Abar
//
// where D mu^N bounds the Carleman truncation error on the first d states,
// Abar bounds ||A - Ahat||, Bbar bounds max(||e^{A tau*}||, 1) and zbar is the
// peak norm of the identified trajectory. Bbar carries e^{Abar tau*}, which
// overflows doubles for realistic Abar, so the search orders candidates by
// log10(Theta) and stores Theta itself as +inf when it is not representable.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "identify.hpp"
#include "lifting.hpp"
#include "nummat.hpp"
#include "simulate.hpp"

namespace carlid {

struct RawBoundParameters {
    double C = 0.0;
    double R = 0.0;
    double C0 = 0.0;
    double M = 0.0;
    double tau_star = 0.0;
    double mu = 0.0;
    unsigned Nbar = 0;
    double Delta = std::numeric_limits<double>::infinity();
};

struct BoundParameters {
    double C, R, C0, M, tau_star, mu;
    unsigned Nbar;
    double Delta;
    double D_M;        // C0 R (1 - M/R)^-1
    double D;          // D_M M / (C0 R)
    double tau_limit;  // -log(M e / R) / C0
    double mu_limit;   // (M e / R) e^{C0 tau*}
};

/// Machine-readable names of the admissibility conditions.
enum class Ensure {
    positive,           // every constant positive, Nbar >= 1, Delta >= 0
    c0_le_c_over_r,     // C0 <= C / R
    m_lt_r_over_e,      // M < R / e
    tau_lt_limit,       // tau* < -log(M e / R) / C0
    mu_lt_limit,        // mu < (M e / R) e^{C0 tau*}
    mu_limit_lt_one,    // (M e / R) e^{C0 tau*} < 1
    m_gt_data_sup,      // M > ||x||_inf over the data
};

inline std::string_view to_string(Ensure e) {
    switch (e) {
        case Ensure::positive: return "positive";
        case Ensure::c0_le_c_over_r: return "C0_le_C_over_R";
        case Ensure::m_lt_r_over_e: return "M_lt_R_over_e";
        case Ensure::tau_lt_limit: return "tau_star_lt_limit";
        case Ensure::mu_lt_limit: return "mu_lt_limit";
        case Ensure::mu_limit_lt_one: return "mu_limit_lt_one";
        case Ensure::m_gt_data_sup: return "M_gt_data_sup";
    }
    return "unknown";
}

struct Violation {
    Ensure clause;
    std::string message;
};

struct ParameterCheck {
    std::optional<BoundParameters> params;
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool violates(Ensure e) const {
        return std::any_of(violations.begin(), violations.end(), [e](const Violation& v) { return v.clause == e; });
    }
};

/// Derived constants without any admissibility checks.
inline BoundParameters derive_constants(const RawBoundParameters& raw) {
    BoundParameters p{raw.C, raw.R, raw.C0, raw.M, raw.tau_star, raw.mu, raw.Nbar, raw.Delta, 0, 0, 0, 0};
    const double ratio = raw.M * std::exp(1.0) / raw.R;
    p.D_M = raw.C0 * raw.R / (1.0 - raw.M / raw.R);
    p.D = p.D_M * raw.M / (raw.C0 * raw.R);
    p.tau_limit = -std::log(ratio) / raw.C0;
    p.mu_limit = ratio * std::exp(raw.C0 * raw.tau_star);
    return p;
}

/// Checks every admissibility condition and, if all hold, returns the populated parameters.
inline ParameterCheck validate_parameters(const RawBoundParameters& raw) {
    ParameterCheck out;
    auto fail = [&](Ensure e, std::string msg) { out.violations.push_back({e, std::move(msg)}); };

    const bool positive = raw.C > 0 && raw.R > 0 && raw.C0 > 0 && raw.M > 0 && raw.tau_star > 0 && raw.mu > 0 &&
                          raw.Nbar >= 1 && raw.Delta >= 0 && std::isfinite(raw.C) && std::isfinite(raw.R) &&
                          std::isfinite(raw.C0) && std::isfinite(raw.M) && std::isfinite(raw.tau_star) &&
                          std::isfinite(raw.mu);
    if (!positive) {
        fail(Ensure::positive, "C, R, C0, M, tau_star and mu must be positive and finite, Nbar >= 1, Delta >= 0");
        return out;
    }

    const BoundParameters p = derive_constants(raw);
    if (!(raw.C0 <= raw.C / raw.R))
        fail(Ensure::c0_le_c_over_r, "C0 = " + std::to_string(raw.C0) + " exceeds C/R = " + std::to_string(raw.C / raw.R));
    if (!(raw.M < raw.R / std::exp(1.0)))
        fail(Ensure::m_lt_r_over_e, "M = " + std::to_string(raw.M) + " is not below R/e = " +
                                        std::to_string(raw.R / std::exp(1.0)));
    if (!(raw.tau_star < p.tau_limit))
        fail(Ensure::tau_lt_limit, "tau_star = " + std::to_string(raw.tau_star) + " is not below -log(Me/R)/C0 = " +
                                       std::to_string(p.tau_limit));
    if (!(p.mu_limit < 1.0))
        fail(Ensure::mu_limit_lt_one, "(Me/R) e^{C0 tau*} = " + std::to_string(p.mu_limit) + " is not below 1");
    if (!(raw.mu < p.mu_limit))
        fail(Ensure::mu_lt_limit, "mu = " + std::to_string(raw.mu) + " is not below (Me/R) e^{C0 tau*} = " +
                                      std::to_string(p.mu_limit));
    if (out.violations.empty()) out.params = p;
    return out;
}

/// Like validate_parameters, but throws with every violation listed.
inline BoundParameters require_parameters(const RawBoundParameters& raw) {
    auto check = validate_parameters(raw);
    if (!check.ok()) {
        std::string msg = "invalid bound parameters:";
        for (const auto& v : check.violations) msg += "\n  [" + std::string(to_string(v.clause)) + "] " + v.message;
        throw std::invalid_argument(msg);
    }
    return *check.params;
}

/// D mu^N
inline double carleman_error_bound(const BoundParameters& p, unsigned n) {
    if (n < 1) throw std::invalid_argument("carleman_error_bound: N must be >= 1");
    return p.D * std::pow(p.mu, static_cast<double>(n));
}

struct EpsilonNorms {
    double eps_norm = 0.0;   // ||eps||: the entrywise bound D mu^N summed over m columns
    double ieps_norm = 0.0;  // ||I_eps|| = T_id * ||eps||
};

/// Default estimator: extend D mu^N to every lifted coordinate and take the
/// induced infinity norm over m columns.
inline EpsilonNorms epsilon_norm_estimates(const BoundParameters& p, unsigned n, std::size_t m, double t_id) {
    const double entry = p.D * std::pow(p.mu, static_cast<double>(n));
    const double eps = static_cast<double>(m) * entry;
    return {eps, t_id * eps};
}

struct BoundInputs {
    double eps_norm = 0.0;
    double ieps_norm = 0.0;
    double ibar = 0.0;          // bound on the inverse Gram norm of the integral matrix
    double igamma_norm = 0.0;   // ||I_Gamma^T||
    double d_data_norm = 0.0;   // ||D||, proxied by ||Gamma(T) - Gamma(0)|| + eps_norm
    double zbar = 0.0;
    double exp_ahat_norm = 0.0; // ||e^{Ahat tau*}||
};

/// Bound on ||A - Ahat|| from the matrix-inverse perturbation identity, with
/// ||I^T|| = ||I|| taken as ||I_Gamma^T|| + ||I_eps^T||.
inline double abar(const BoundInputs& in) {
    const double it = in.igamma_norm + in.ieps_norm;
    const double i = it;
    const double ie = in.ieps_norm;
    const double e = in.eps_norm;
    const double d = in.d_data_norm;
    const double direct = in.ibar * (it * e + ie * d + ie * e);
    const double gram = in.ibar * (it * ie + ie * i + ie * ie);
    const double lhs = it * d + it * e + ie * d + ie * e;
    return direct + gram * lhs;
}

/// max(e^{abar tau*} ||e^{Ahat tau*}||, 1), in natural-log form.
inline double log_bbar(double abar_value, double tau_star, double exp_ahat_norm) {
    if (exp_ahat_norm <= 0.0) return 0.0;
    return std::max(abar_value * tau_star + std::log(exp_ahat_norm), 0.0);
}

inline double bbar(double abar_value, double tau_star, double exp_ahat_norm) {
    return std::max(std::exp(abar_value * tau_star) * exp_ahat_norm, 1.0);
}

struct CertifiedBound {
    unsigned N = 0;
    double carleman_term = 0.0;  // D mu^N
    double abar = 0.0;
    double bbar = 1.0;           // +inf when not representable
    double zbar = 0.0;
    double theta = 0.0;          // +inf when not representable
    double log10_theta = -std::numeric_limits<double>::infinity();
    double log_bbar = 0.0;

    /// tau* Bbar zbar Abar
    double identification_term(double tau_star) const { return tau_star * bbar * zbar * abar; }
};

namespace detail {

inline double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

inline double safe_log(double v) {
    return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Theta(N) with Bbar given by its natural log.
inline CertifiedBound theta_from_log_bbar(const BoundParameters& p, unsigned n, double abar_value,
                                          double log_bbar_value, double zbar) {
    CertifiedBound b;
    b.N = n;
    b.carleman_term = carleman_error_bound(p, n);
    b.abar = abar_value;
    b.log_bbar = log_bbar_value;
    b.bbar = std::exp(log_bbar_value);
    b.zbar = zbar;
    const double log_id = (abar_value > 0.0 && zbar > 0.0)
                              ? std::log(p.tau_star) + log_bbar_value + std::log(zbar) + std::log(abar_value)
                              : -std::numeric_limits<double>::infinity();
    const double log_theta = detail::log_sum_exp(detail::safe_log(b.carleman_term), log_id);
    b.log10_theta = log_theta / std::log(10.0);
    b.theta = b.carleman_term + p.tau_star * b.bbar * zbar * abar_value;
    if (!std::isfinite(b.theta) && std::isfinite(log_theta)) b.theta = std::numeric_limits<double>::infinity();
    return b;
}

/// Theta(N) = D mu^N + tau* Bbar zbar Abar.
inline CertifiedBound theta(const BoundParameters& p, unsigned n, double abar_value, double bbar_value, double zbar) {
    if (bbar_value < 1.0) throw std::invalid_argument("theta: Bbar must be >= 1");
    return theta_from_log_bbar(p, n, abar_value, std::log(bbar_value), zbar);
}

/// Time-varying form D mu^N + t Bbar zbar Abar for t in [0, tau*].
inline double composite_bound(const BoundParameters& p, unsigned n, double abar_value, double bbar_value,
                              double zbar, double t) {
    if (!(t >= 0.0) || t > p.tau_star * (1.0 + 1e-12))
        throw std::out_of_range("composite_bound: t = " + std::to_string(t) + " outside [0, tau*]");
    return carleman_error_bound(p, n) + t * bbar_value * zbar * abar_value;
}

enum class RepresentativePolicy { largest_initial_norm, fixed_index };

struct SearchConfig {
    NormKind norm = NormKind::inf;
    double rcond = default_rcond;
    std::optional<double> t_id;   // identification window length; defaults to tau*
    double window_start = 0.0;
    RepresentativePolicy representative = RepresentativePolicy::largest_initial_norm;
    std::size_t representative_index = 0;
};

struct CurveEntry {
    CertifiedBound bound;
    bool certifiable = false;
    double condition_number = std::numeric_limits<double>::infinity();
    std::string note;       // why the entry is not certifiable
    BoundInputs inputs;
};

struct SearchResult {
    std::vector<CurveEntry> curve;
    std::vector<std::optional<IdentifiedModel>> models;  // index N - 1
    std::optional<unsigned> nstar;                       // argmin over certifiable entries
    bool certified = false;                              // min Theta <= Delta
    std::string verdict;                                 // "certified" or "Failed: ..."

    const CurveEntry* best() const { return nstar ? &curve[*nstar - 1] : nullptr; }
    const IdentifiedModel* model_at(unsigned n) const {
        return (n >= 1 && n <= models.size() && models[n - 1]) ? &*models[n - 1] : nullptr;
    }
};

/// sup over [0, horizon] of ||zhat(t)|| for zhat' = Ahat zhat, on a grid of step at most h.
inline double peak_norm(const Eigen::MatrixXd& ahat, const Eigen::VectorXd& z0, double horizon, double h,
                        NormKind norm) {
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / h - 1e-9)));
    const LinearPropagator prop(ahat, horizon / static_cast<double>(steps));
    Eigen::MatrixXd z = z0;
    double peak = vector_norm(z0, norm);
    for (std::size_t k = 0; k < steps; ++k) {
        prop.step(z);
        if (!z.allFinite()) return std::numeric_limits<double>::infinity();
        peak = std::max(peak, vector_norm(z.col(0), norm));
    }
    return peak;
}

/// Order search: identify and certify every N = 1..Nbar and return the argmin.
inline SearchResult order_search(const TrajectorySet& data, const BoundParameters& p, const SearchConfig& cfg = {}) {
    if (data.empty()) throw std::invalid_argument("order_search: empty trajectory set");
    const double sup = data.sup_norm();
    if (!(sup < p.M))
        throw std::invalid_argument("[" + std::string(to_string(Ensure::m_gt_data_sup)) + "] data reaches norm " +
                                    std::to_string(sup) + ", M = " + std::to_string(p.M) + " must exceed it");

    const double t_id = cfg.t_id.value_or(p.tau_star);
    const Window window{cfg.window_start, cfg.window_start + t_id};
    const double h = data.grid().h;

    SearchResult result;
    result.curve.reserve(p.Nbar);
    result.models.resize(p.Nbar);
    for (unsigned n = 1; n <= p.Nbar; ++n) {
        CurveEntry entry;
        BoundInputs in;
        entry.bound.N = n;
        entry.bound.carleman_term = carleman_error_bound(p, n);
        auto reject = [&](std::string why) {
            entry.certifiable = false;
            entry.note = std::move(why);
            entry.bound.theta = std::numeric_limits<double>::quiet_NaN();
            entry.bound.log10_theta = std::numeric_limits<double>::quiet_NaN();
        };
        try {
            const LiftingBasis basis(data.dim(), n);
            const LiftedDataset lifted = lift_dataset(data, basis, window);
            IdentifiedModel model = estimate(lifted, cfg.rcond);
            entry.condition_number = model.condition_number;

            const auto eps = epsilon_norm_estimates(p, n, static_cast<std::size_t>(lifted.columns()), t_id);
            in.eps_norm = eps.eps_norm;
            in.ieps_norm = eps.ieps_norm;
            in.igamma_norm = induced_norm(lifted.igamma.transpose(), cfg.norm);
            in.d_data_norm = induced_norm(lifted.increments(), cfg.norm) + in.eps_norm;

            Eigen::Index rep = 0;
            if (cfg.representative == RepresentativePolicy::fixed_index) {
                rep = static_cast<Eigen::Index>(std::min<std::size_t>(cfg.representative_index,
                                                                      static_cast<std::size_t>(lifted.columns() - 1)));
            } else {
                double best = -1.0;
                for (Eigen::Index i = 0; i < lifted.columns(); ++i) {
                    const double v = vector_norm(lifted.gamma0.col(i), cfg.norm);
                    if (v > best) best = v, rep = i;
                }
            }

            const bool ahat_finite = model.ahat.allFinite();
            const bool rank_ok = model.full_row_rank;
            result.models[n - 1] = std::move(model);
            if (!rank_ok) {
                reject("integral matrix is row-rank deficient");
            } else if (!ahat_finite) {
                reject("identified matrix is not finite");
            } else {
                const auto& ahat = result.models[n - 1]->ahat;
                in.ibar = gram_inverse_norm(lifted.igamma.transpose(), cfg.norm);
                in.exp_ahat_norm = induced_norm(expm(ahat * p.tau_star), cfg.norm);
                in.zbar = peak_norm(ahat, lifted.gamma0.col(rep), p.tau_star, h, cfg.norm);
                if (!std::isfinite(in.zbar)) {
                    reject("identified trajectory is not finite on [0, tau*]");
                } else {
                    const double a = abar(in);
                    entry.bound = theta_from_log_bbar(p, n, a, log_bbar(a, p.tau_star, in.exp_ahat_norm), in.zbar);
                    entry.certifiable = std::isfinite(entry.bound.log10_theta);
                    if (!entry.certifiable) entry.note = "bound is not finite";
                }
            }
        } catch (const RankDeficiencyError& e) {
            reject(std::string("Gram inverse bound unavailable: ") + e.what());
        } catch (const NumericalError& e) {
            reject(e.what());
        }
        entry.inputs = in;
        result.curve.push_back(std::move(entry));
    }

    for (const auto& e : result.curve) {
        if (!e.certifiable) continue;
        if (!result.nstar || e.bound.log10_theta < result.curve[*result.nstar - 1].bound.log10_theta)
            result.nstar = e.bound.N;
    }
    if (!result.nstar) {
        result.verdict = "Failed: no truncation order produced a certificate";
        return result;
    }
    const double best = result.curve[*result.nstar - 1].bound.log10_theta;
    result.certified = best <= std::log10(p.Delta);
    result.verdict = result.certified ? "certified" : "Failed: min Theta exceeds Delta";
    return result;
}

}  // namespace carlid
