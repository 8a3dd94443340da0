#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace carlid {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A state or lifted state stopped being finite during propagation.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, double time)
        : std::runtime_error(what), time(time) {}
    double time;
};

/// Raised when a Gram matrix is too ill-conditioned to bound its inverse.
struct RankDeficiencyError : std::runtime_error {
    RankDeficiencyError(const std::string& what, double condition)
        : std::runtime_error(what), condition(condition) {}
    double condition;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line(line) {}
    std::size_t line;
};

}  // namespace carlid
