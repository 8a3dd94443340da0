#pragma once

// Trajectory generation: fixed-step RK4 for polynomial fields and exact
// exponential stepping for linear (lifted) systems.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "nummat.hpp"
#include "polyflow.hpp"

namespace carlid {

struct TimeGrid {
    double t0 = 0.0;
    double h = 0.01;
    std::size_t count = 1;

    TimeGrid() = default;
    TimeGrid(double t0, double h, std::size_t count) : t0(t0), h(h), count(count) {
        if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("time grid step must be positive");
        if (count == 0) throw std::invalid_argument("time grid needs at least one point");
    }

    /// Grid with step h covering [t0, t0 + length]; length must be a multiple of h.
    static TimeGrid covering(double t0, double h, double length) {
        const double steps = length / h;
        const double rounded = std::round(steps);
        if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, rounded))
            throw std::invalid_argument("time span " + std::to_string(length) +
                                        " is not a multiple of the step " + std::to_string(h));
        return TimeGrid(t0, h, static_cast<std::size_t>(rounded) + 1);
    }

    double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * h; }
    double end() const noexcept { return time(count - 1); }

    /// Index of the grid point at time t, if t lies on the grid.
    std::optional<std::size_t> index_of(double t) const {
        const double k = (t - t0) / h;
        const double rounded = std::round(k);
        if (rounded < 0.0 || rounded > static_cast<double>(count - 1)) return std::nullopt;
        if (std::abs(k - rounded) > 1e-9 * std::max(1.0, rounded)) return std::nullopt;
        return static_cast<std::size_t>(rounded);
    }

    bool operator==(const TimeGrid& o) const { return t0 == o.t0 && h == o.h && count == o.count; }
};

struct Trajectory {
    TimeGrid grid;
    Eigen::MatrixXd states;  // count x dimension, row k at grid.time(k)

    std::size_t dim() const noexcept { return static_cast<std::size_t>(states.cols()); }
    Eigen::VectorXd state(std::size_t k) const { return states.row(static_cast<Eigen::Index>(k)).transpose(); }

    double sup_norm(NormKind kind) const {
        double s = 0.0;
        for (Eigen::Index k = 0; k < states.rows(); ++k) s = std::max(s, vector_norm(states.row(k).transpose(), kind));
        return s;
    }
};

class TrajectorySet {
public:
    TrajectorySet() = default;

    /// Throws if trajectories disagree on grid or dimension, or exceed the amplitude bound.
    TrajectorySet(std::vector<Trajectory> trajectories, double amplitude_bound, NormKind norm = NormKind::inf)
        : trajectories_(std::move(trajectories)), bound_(amplitude_bound), norm_(norm) {
        if (!(amplitude_bound > 0.0)) throw std::invalid_argument("amplitude bound M must be positive");
        if (trajectories_.empty()) return;
        const auto& first = trajectories_.front();
        for (std::size_t i = 0; i < trajectories_.size(); ++i) {
            const auto& t = trajectories_[i];
            if (!(t.grid == first.grid) || t.dim() != first.dim())
                throw DimensionError("trajectory " + std::to_string(i) + " has a different grid or dimension");
            if (static_cast<std::size_t>(t.states.rows()) != t.grid.count)
                throw DimensionError("trajectory " + std::to_string(i) + " row count does not match its grid");
            if (!t.states.allFinite())
                throw std::invalid_argument("trajectory " + std::to_string(i) + " has non-finite samples");
            const double s = t.sup_norm(norm_);
            if (s > bound_)
                throw std::invalid_argument("trajectory " + std::to_string(i) + " reaches norm " +
                                            std::to_string(s) + " > M = " + std::to_string(bound_));
        }
    }

    const std::vector<Trajectory>& trajectories() const noexcept { return trajectories_; }
    std::size_t size() const noexcept { return trajectories_.size(); }
    bool empty() const noexcept { return trajectories_.empty(); }
    const Trajectory& operator[](std::size_t i) const { return trajectories_[i]; }
    double amplitude_bound() const noexcept { return bound_; }
    NormKind norm() const noexcept { return norm_; }
    const TimeGrid& grid() const { return trajectories_.front().grid; }
    std::size_t dim() const { return trajectories_.front().dim(); }

    double sup_norm() const {
        double s = 0.0;
        for (const auto& t : trajectories_) s = std::max(s, t.sup_norm(norm_));
        return s;
    }

private:
    std::vector<Trajectory> trajectories_;
    double bound_ = 1.0;
    NormKind norm_ = NormKind::inf;
};

/// Classical fourth-order Runge-Kutta with fixed step, recording every step.
inline Trajectory integrate_field(const PolynomialField& field, const Eigen::VectorXd& x0, const TimeGrid& grid) {
    if (static_cast<std::size_t>(x0.size()) != field.dim())
        throw DimensionError("integrate_field: initial state has length " + std::to_string(x0.size()) +
                             ", field dimension is " + std::to_string(field.dim()));
    Trajectory traj{grid, Eigen::MatrixXd(static_cast<Eigen::Index>(grid.count), x0.size())};
    Eigen::VectorXd x = x0;
    const double h = grid.h;
    traj.states.row(0) = x.transpose();
    for (std::size_t k = 1; k < grid.count; ++k) {
        const Eigen::VectorXd k1 = field.evaluate(x);
        const Eigen::VectorXd k2 = field.evaluate(x + 0.5 * h * k1);
        const Eigen::VectorXd k3 = field.evaluate(x + 0.5 * h * k2);
        const Eigen::VectorXd k4 = field.evaluate(x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite())
            throw DivergenceError("trajectory diverged at t = " + std::to_string(grid.time(k)), grid.time(k));
        traj.states.row(static_cast<Eigen::Index>(k)) = x.transpose();
    }
    return traj;
}

/// Steps z_{k+1} = e^{Ah} z_k with the transition matrix computed once.
class LinearPropagator {
public:
    LinearPropagator(const Eigen::MatrixXd& a, double h) : transition_(expm(a * h)), h_(h) {}

    const Eigen::MatrixXd& transition() const noexcept { return transition_; }
    double step_size() const noexcept { return h_; }

    /// Advances every column of z by one step.
    void step(Eigen::MatrixXd& z) const { z = transition_ * z; }

private:
    Eigen::MatrixXd transition_;
    double h_;
};

inline Trajectory integrate_linear(const Eigen::MatrixXd& a, const Eigen::VectorXd& z0, const TimeGrid& grid) {
    if (a.rows() != a.cols()) throw DimensionError("integrate_linear: matrix must be square");
    if (z0.size() != a.rows())
        throw DimensionError("integrate_linear: initial state has length " + std::to_string(z0.size()) +
                             ", matrix side is " + std::to_string(a.rows()));
    const LinearPropagator prop(a, grid.h);
    Trajectory traj{grid, Eigen::MatrixXd(static_cast<Eigen::Index>(grid.count), z0.size())};
    Eigen::MatrixXd z = z0;
    traj.states.row(0) = z.transpose();
    for (std::size_t k = 1; k < grid.count; ++k) {
        prop.step(z);
        if (!z.allFinite())
            throw DivergenceError("linear propagation became non-finite at t = " + std::to_string(grid.time(k)),
                                  grid.time(k));
        traj.states.row(static_cast<Eigen::Index>(k)) = z.transpose();
    }
    return traj;
}

/// Axis-aligned box of initial conditions sampled i.i.d. uniformly.
struct InitialConditionSpec {
    std::size_t count = 209;
    Eigen::VectorXd lower = Eigen::Vector2d(-1.0, -1.0);
    Eigen::VectorXd upper = Eigen::Vector2d(1.0, 1.0);
    std::uint64_t seed = 20230101;
};

/// Uniform double in [0, 1) from the top 53 bits; identical across standard libraries.
inline double unit_uniform(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline std::vector<Eigen::VectorXd> sample_initial_conditions(const InitialConditionSpec& spec) {
    if (spec.lower.size() != spec.upper.size())
        throw DimensionError("initial-condition box bounds have different lengths");
    for (Eigen::Index j = 0; j < spec.lower.size(); ++j)
        if (spec.lower[j] > spec.upper[j]) throw std::invalid_argument("initial-condition box has lower > upper");
    std::mt19937_64 gen(spec.seed);
    std::vector<Eigen::VectorXd> out;
    out.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        Eigen::VectorXd x(spec.lower.size());
        for (Eigen::Index j = 0; j < x.size(); ++j)
            x[j] = spec.lower[j] + (spec.upper[j] - spec.lower[j]) * unit_uniform(gen);
        out.push_back(std::move(x));
    }
    return out;
}

struct RejectedSample {
    std::size_t index;        // position in the sampled sequence
    Eigen::VectorXd initial;
    double sup_norm;
};

struct GeneratedDataset {
    TrajectorySet set;
    std::vector<std::size_t> accepted_indices;
    std::vector<RejectedSample> rejected;
};

/// Integrates every sampled initial condition and keeps the trajectories
/// whose sup norm stays within M. Divergence is fatal and names the time.
inline GeneratedDataset generate_dataset(const PolynomialField& field, const InitialConditionSpec& spec,
                                         const TimeGrid& grid, double amplitude_bound,
                                         NormKind norm = NormKind::inf) {
    if (spec.count == 0) throw std::invalid_argument("initial-condition count must be positive");
    if (static_cast<std::size_t>(spec.lower.size()) != field.dim())
        throw DimensionError("initial-condition box dimension does not match the field");
    const auto initial = sample_initial_conditions(spec);
    std::vector<Trajectory> kept;
    GeneratedDataset out;
    for (std::size_t i = 0; i < initial.size(); ++i) {
        Trajectory t;
        try {
            t = integrate_field(field, initial[i], grid);
        } catch (const DivergenceError& e) {
            std::ostringstream os;
            os << "initial condition " << i << " (" << initial[i].transpose() << ") diverged at t = " << e.time;
            throw DivergenceError(os.str(), e.time);
        }
        const double s = t.sup_norm(norm);
        if (s > amplitude_bound) {
            out.rejected.push_back({i, initial[i], s});
            continue;
        }
        out.accepted_indices.push_back(i);
        kept.push_back(std::move(t));
    }
    out.set = TrajectorySet(std::move(kept), amplitude_bound, norm);
    return out;
}

}  // namespace carlid
