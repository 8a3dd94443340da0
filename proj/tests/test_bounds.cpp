#include <cmath>

#include <gtest/gtest.h>

#include "carlid/bounds.hpp"
#include "carlid/polyflow.hpp"

using namespace carlid;

namespace {

RawBoundParameters reference(double mu = 0.9946) { return {33.7, 4.1, 0.001, 1.5, 0.2, mu, 13, INFINITY}; }

BoundParameters unit_params(double d, double mu, double tau) {
    BoundParameters p = derive_constants({3.0, 10.0, 0.3, 1.0, tau, mu, 4, INFINITY});
    p.D = d;
    return p;
}

TrajectorySet linear_set(const Eigen::Matrix2d& a) {
    const auto grid = TimeGrid::covering(0.0, 0.01, 1.0);
    std::vector<Trajectory> trajs;
    for (const auto& x : {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(-0.5, 0.5)})
        trajs.push_back(integrate_linear(a, x, grid));
    return TrajectorySet(trajs, 1.5);
}

}  // namespace

TEST(Bounds, ReferenceArithmetic) {
    const auto check = validate_parameters(reference());
    ASSERT_TRUE(check.ok());
    const auto& p = *check.params;
    EXPECT_NEAR(p.D, 1.5 / (1.0 - 1.5 / 4.1), 1e-12);
    EXPECT_NEAR(p.D, 2.3654, 1e-3);
    EXPECT_NEAR(p.D_M, 0.001 * 4.1 / (1.0 - 1.5 / 4.1), 1e-15);
    EXPECT_NEAR(p.tau_limit, 5.52, 0.01);
    EXPECT_NEAR(p.mu_limit, 0.99469, 1e-4);
    EXPECT_NEAR(carleman_error_bound(p, 3), 2.327, 1e-3);
}

TEST(Bounds, EnsureClausesAtBoundaries) {
    EXPECT_TRUE(validate_parameters(reference(0.9947)).violates(Ensure::mu_lt_limit));

    RawBoundParameters m_edge = reference();
    m_edge.M = m_edge.R / std::exp(1.0);
    EXPECT_TRUE(validate_parameters(m_edge).violates(Ensure::m_lt_r_over_e));

    RawBoundParameters c0_edge = reference(0.5);
    c0_edge.C0 = c0_edge.C / c0_edge.R;
    c0_edge.tau_star = 0.01;
    EXPECT_FALSE(validate_parameters(c0_edge).violates(Ensure::c0_le_c_over_r));
    c0_edge.C0 = std::nextafter(c0_edge.C / c0_edge.R, 1e9);
    EXPECT_TRUE(validate_parameters(c0_edge).violates(Ensure::c0_le_c_over_r));

    RawBoundParameters tau = reference(0.5);
    tau.tau_star = derive_constants(tau).tau_limit;
    const auto tc = validate_parameters(tau);
    EXPECT_TRUE(tc.violates(Ensure::tau_lt_limit));
    EXPECT_TRUE(tc.violates(Ensure::mu_limit_lt_one));

    RawBoundParameters neg = reference();
    neg.C = -1;
    EXPECT_TRUE(validate_parameters(neg).violates(Ensure::positive));
    RawBoundParameters nbar = reference();
    nbar.Nbar = 0;
    EXPECT_TRUE(validate_parameters(nbar).violates(Ensure::positive));
    EXPECT_THROW(require_parameters(reference(0.9947)), std::invalid_argument);
}

TEST(Bounds, CarlemanTerm) {
    const auto p = unit_params(1.0, 0.5, 0.2);
    EXPECT_DOUBLE_EQ(carleman_error_bound(p, 4), 0.0625);
    const auto q = require_parameters(reference());
    for (unsigned n = 1; n < 13; ++n) EXPECT_LT(carleman_error_bound(q, n + 1), carleman_error_bound(q, n));
    EXPECT_THROW(carleman_error_bound(q, 0), std::invalid_argument);
}

TEST(Bounds, EpsilonEstimates) {
    const auto p = unit_params(0.1 / 0.5, 0.5, 0.2);
    const auto one = epsilon_norm_estimates(p, 1, 1, 0.2);
    EXPECT_NEAR(one.eps_norm, 0.1, 1e-15);
    EXPECT_NEAR(one.ieps_norm, 0.02, 1e-15);
    const auto e = epsilon_norm_estimates(require_parameters(reference()), 3, 209, 0.2);
    EXPECT_NEAR(e.eps_norm, 486.4, 0.1);
    EXPECT_NEAR(e.ieps_norm, 97.3, 0.05);
    const auto z = epsilon_norm_estimates(unit_params(0.0, 0.5, 0.2), 3, 209, 0.2);
    EXPECT_EQ(z.eps_norm, 0.0);
    EXPECT_EQ(z.ieps_norm, 0.0);
}

TEST(Bounds, AbarExamples) {
    BoundInputs in{0.0, 0.0, 3.0, 2.0, 5.0, 1.0, 1.0};
    EXPECT_EQ(abar(in), 0.0);

    // Hand expansion with I^T = I = IGamma + Ieps = 1.1.
    in = {0.1, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0};
    const double it = 1.1, e = 0.1, ie = 0.1, d = 1.0;
    const double hand = (it * e + ie * d + ie * e) + (it * ie + ie * it + ie * ie) * (it * d + it * e + ie * d + ie * e);
    EXPECT_NEAR(hand, 0.5236, 1e-12);
    EXPECT_NEAR(abar(in), 0.5236, 1e-12);

    BoundInputs doubled = in;
    doubled.eps_norm *= 2;
    doubled.ieps_norm *= 2;
    EXPECT_GT(abar(doubled), abar(in));
}

TEST(Bounds, BbarExamples) {
    EXPECT_DOUBLE_EQ(bbar(0.0, 0.2, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(bbar(0.0, 0.2, 2.0), 2.0);
    EXPECT_NEAR(bbar(1.0, 0.2, 1.0), std::exp(0.2), 1e-15);
    EXPECT_NEAR(std::exp(log_bbar(1.0, 0.2, 1.0)), bbar(1.0, 0.2, 1.0), 1e-15);
    EXPECT_EQ(log_bbar(0.0, 0.2, 0.5), 0.0);
    EXPECT_TRUE(std::isinf(bbar(1e8, 0.2, 1.0)));
    EXPECT_NEAR(log_bbar(1e8, 0.2, 1.0), 2e7, 1e-6);
}

TEST(Bounds, ThetaAndCompositeBound) {
    const auto p = unit_params(1.0, 0.5, 0.2);
    const auto t = theta(p, 2, 1.0, 1.0, 1.0);
    EXPECT_NEAR(t.theta, 0.45, 1e-15);
    EXPECT_NEAR(t.log10_theta, std::log10(0.45), 1e-14);
    EXPECT_DOUBLE_EQ(theta(p, 2, 0.0, 1.0, 1.0).theta, 0.25);

    const auto q = require_parameters(reference());
    EXPECT_GE(theta(q, 3, 0.01, 1.0, 1.0).theta, carleman_error_bound(q, 3));

    EXPECT_DOUBLE_EQ(composite_bound(p, 2, 1.0, 1.0, 1.0, 0.0), 0.25);
    EXPECT_NEAR(composite_bound(p, 2, 1.0, 1.0, 1.0, 0.2), t.theta, 1e-15);
    const double mid = composite_bound(p, 2, 1.0, 1.0, 1.0, 0.1);
    EXPECT_NEAR(mid, 0.5 * (0.25 + 0.45), 1e-15);
    EXPECT_THROW(composite_bound(p, 2, 1.0, 1.0, 1.0, 0.3), std::out_of_range);
    EXPECT_THROW(composite_bound(p, 2, 1.0, 1.0, 1.0, -0.1), std::out_of_range);
}

TEST(Bounds, LogSpaceThetaSurvivesOverflow) {
    const auto q = require_parameters(reference());
    const auto b = theta_from_log_bbar(q, 1, 1e9, 2e8, 1.0);
    EXPECT_TRUE(std::isinf(b.theta));
    EXPECT_TRUE(std::isfinite(b.log10_theta));
    EXPECT_NEAR(b.log10_theta, (std::log(0.2) + 2e8 + std::log(1e9)) / std::log(10.0), 1e-3);
}

TEST(Bounds, PeakNorm) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(1, 1, -1.0);
    EXPECT_DOUBLE_EQ(peak_norm(a, Eigen::VectorXd::Constant(1, 2.0), 0.5, 0.01, NormKind::inf), 2.0);
    a(0, 0) = 1.0;
    EXPECT_NEAR(peak_norm(a, Eigen::VectorXd::Constant(1, 1.0), 0.5, 0.01, NormKind::inf), std::exp(0.5), 1e-12);
}

TEST(Bounds, OrderSearchOnLinearData) {
    Eigen::Matrix2d a0;
    a0 << -0.5, 0.4, -0.4, -0.5;
    const auto data = linear_set(a0);
    RawBoundParameters raw{3.0, 10.0, 0.3, 1.5, 0.5, 0.45, 1, INFINITY};
    const auto p = require_parameters(raw);
    SearchConfig cfg;
    cfg.t_id = 1.0;
    const auto res = order_search(data, p, cfg);
    ASSERT_EQ(res.curve.size(), 1u);
    ASSERT_TRUE(res.nstar.has_value());
    EXPECT_EQ(*res.nstar, 1u);
    EXPECT_TRUE(res.certified);
    EXPECT_LT(induced_norm(res.model_at(1)->ahat - a0, NormKind::inf), 1e-4);

    raw.Delta = 0.0;
    const auto failed = order_search(data, require_parameters(raw), cfg);
    EXPECT_FALSE(failed.certified);
    EXPECT_EQ(failed.verdict.rfind("Failed", 0), 0u);
    EXPECT_EQ(failed.curve.size(), 1u);
}

TEST(Bounds, OrderSearchFlagsRankDeficiency) {
    const auto grid = TimeGrid::covering(0.0, 0.01, 0.5);
    const auto tr = integrate_field(van_der_pol_field(), Eigen::Vector2d(0.5, 0.5), grid);
    const TrajectorySet one({tr}, 1.0);
    const auto p = require_parameters({3.0, 10.0, 0.3, 1.0, 0.5, 0.3, 2, INFINITY});
    const auto res = order_search(one, p);
    ASSERT_EQ(res.curve.size(), 2u);
    EXPECT_FALSE(res.curve[0].certifiable);
    EXPECT_FALSE(res.curve[1].certifiable);
    EXPECT_FALSE(res.nstar.has_value());
    EXPECT_FALSE(res.certified);
}

TEST(Bounds, OrderSearchRequiresMAboveData) {
    const auto grid = TimeGrid::covering(0.0, 0.01, 0.5);
    const auto tr = integrate_field(van_der_pol_field(), Eigen::Vector2d(0.9, 0.9), grid);
    const TrajectorySet data({tr}, 2.0);
    const auto p = require_parameters({3.0, 10.0, 0.3, 0.5, 0.5, 0.15, 2, INFINITY});
    EXPECT_THROW(order_search(data, p), std::invalid_argument);
}
