#pragma once

// Experiment configuration: a flat key = value format with [section]
// headers, '#' comments, and polynomial term lines in the [field] section:
//
//     [field]
//     dim = 2
//     f: 2 1 -> 0 1        # coefficient vector of x1^2 x2 is (0, 1)
//
// Each term line lists the d exponents of a monomial, then "->", then the d
// entries of its coefficient vector (one per state equation). Repeated
// monomials accumulate.

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bounds.hpp"
#include "errors.hpp"
#include "nummat.hpp"
#include "polyflow.hpp"
#include "simulate.hpp"

namespace carlid {

/// FNV-1a 64-bit; stable across platforms, used to tag outputs with their config.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct ExperimentConfig {
    std::string text;  // source text, hashed into every output manifest

    std::optional<PolynomialField> field;
    InitialConditionSpec sampler;
    double h = 0.01;
    double t_record = 10.0;

    unsigned n_min = 1;
    unsigned n_max = 12;
    std::vector<unsigned> overlay_orders{2, 5, 11};
    std::size_t overlay_trajectory = 0;

    std::optional<double> C, R, C0, M, tau_star, mu, delta;
    std::optional<unsigned> nbar;

    std::optional<double> t_id;    // identification window for identify/replicate; default t_record
    std::optional<double> t_cert;  // certification window; default tau_star
    double t_sim = 20.0;

    NormKind norm = NormKind::inf;
    double rcond = default_rcond;
    std::string out_dir = "out";

    std::string hash() const { return hex64(fnv1a(text)); }
    double identification_window() const { return t_id.value_or(t_record); }

    /// Names of [bounds] keys that are absent; certification needs all of them.
    std::vector<std::string> missing_bound_keys() const {
        std::vector<std::string> miss;
        if (!C) miss.emplace_back("C");
        if (!R) miss.emplace_back("R");
        if (!C0) miss.emplace_back("C0");
        if (!M) miss.emplace_back("M");
        if (!tau_star) miss.emplace_back("tau_star");
        if (!mu) miss.emplace_back("mu");
        if (!nbar) miss.emplace_back("nbar");
        if (!delta) miss.emplace_back("delta");
        return miss;
    }

    RawBoundParameters raw_bounds() const {
        const auto miss = missing_bound_keys();
        if (!miss.empty()) {
            std::string msg = "missing required key(s) in [bounds]:";
            for (const auto& k : miss) msg += " " + k;
            throw ParseError(msg, 0);
        }
        return RawBoundParameters{*C, *R, *C0, *M, *tau_star, *mu, *nbar, *delta};
    }

    double amplitude_bound() const {
        if (!M) throw ParseError("missing required key [bounds] M (amplitude bound)", 0);
        return *M;
    }

    TimeGrid record_grid() const { return TimeGrid::covering(0.0, h, t_record); }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& v, std::size_t line, const std::string& key) {
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ParseError("key '" + key + "': '" + v + "' is not a number", line);
    }
}

inline long long parse_integer(const std::string& v, std::size_t line, const std::string& key) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ParseError("key '" + key + "': '" + v + "' is not an integer", line);
    }
}

inline unsigned parse_positive(const std::string& v, std::size_t line, const std::string& key) {
    const long long x = parse_integer(v, line, key);
    if (x < 1) throw ParseError("key '" + key + "' must be a positive integer", line);
    return static_cast<unsigned>(x);
}

inline std::vector<double> parse_reals(const std::string& v, std::size_t line, const std::string& key) {
    std::istringstream is(v);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(parse_real(tok, line, key));
    return out;
}

}  // namespace detail

/// Parses configuration text; errors carry the offending line number.
inline ExperimentConfig parse_config(const std::string& text) {
    using detail::trim;
    ExperimentConfig cfg;
    cfg.text = text;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    std::optional<std::size_t> dim;
    struct PendingTerm {
        std::vector<unsigned> exps;
        std::vector<double> coeffs;
        std::size_t line;
    };
    std::vector<PendingTerm> terms;
    bool lower_set = false, upper_set = false;

    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", lineno);
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"field", "sampler", "grid", "lifting", "bounds", "windows", "output"};
            bool ok = false;
            for (const char* k : known) ok = ok || section == k;
            if (!ok) throw ParseError("unknown section [" + section + "]", lineno);
            continue;
        }

        if (line.rfind("f:", 0) == 0) {
            if (section != "field") throw ParseError("term line outside [field]", lineno);
            const std::string body = line.substr(2);
            const auto arrow = body.find("->");
            if (arrow == std::string::npos) throw ParseError("term line needs 'exponents -> coefficients'", lineno);
            PendingTerm t;
            t.line = lineno;
            {
                std::istringstream es(body.substr(0, arrow));
                std::string tok;
                while (es >> tok) {
                    const long long e = detail::parse_integer(tok, lineno, "f");
                    if (e < 0) throw ParseError("negative exponent in term line", lineno);
                    t.exps.push_back(static_cast<unsigned>(e));
                }
            }
            t.coeffs = detail::parse_reals(body.substr(arrow + 2), lineno, "f");
            if (t.exps.empty() || t.coeffs.empty()) throw ParseError("empty term line", lineno);
            terms.push_back(std::move(t));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (val.empty()) throw ParseError("key '" + key + "' has no value", lineno);
        if (section.empty()) throw ParseError("key '" + key + "' appears before any section", lineno);

        auto unknown = [&] { throw ParseError("unknown key '" + key + "' in [" + section + "]", lineno); };
        auto real = [&] { return detail::parse_real(val, lineno, key); };
        if (section == "field") {
            if (key == "dim") dim = detail::parse_positive(val, lineno, key);
            else unknown();
        } else if (section == "sampler") {
            if (key == "count") {
                const long long c = detail::parse_integer(val, lineno, key);
                if (c < 0) throw ParseError("count must be non-negative", lineno);
                cfg.sampler.count = static_cast<std::size_t>(c);
            } else if (key == "seed") {
                cfg.sampler.seed = static_cast<std::uint64_t>(detail::parse_integer(val, lineno, key));
            } else if (key == "lower" || key == "upper") {
                const auto v = detail::parse_reals(val, lineno, key);
                Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
                (key == "lower" ? cfg.sampler.lower : cfg.sampler.upper) = e;
                (key == "lower" ? lower_set : upper_set) = true;
            } else unknown();
        } else if (section == "grid") {
            if (key == "h") cfg.h = real();
            else if (key == "t_record") cfg.t_record = real();
            else unknown();
        } else if (section == "lifting") {
            if (key == "n_min") cfg.n_min = detail::parse_positive(val, lineno, key);
            else if (key == "n_max") cfg.n_max = detail::parse_positive(val, lineno, key);
            else if (key == "nbar") cfg.nbar = detail::parse_positive(val, lineno, key);
            else if (key == "overlay_orders") {
                cfg.overlay_orders.clear();
                std::istringstream is(val);
                std::string tok;
                while (is >> tok) cfg.overlay_orders.push_back(detail::parse_positive(tok, lineno, key));
            } else if (key == "overlay_trajectory") {
                const long long i = detail::parse_integer(val, lineno, key);
                if (i < 0) throw ParseError("overlay_trajectory must be non-negative", lineno);
                cfg.overlay_trajectory = static_cast<std::size_t>(i);
            } else unknown();
        } else if (section == "bounds") {
            if (key == "C") cfg.C = real();
            else if (key == "R") cfg.R = real();
            else if (key == "C0") cfg.C0 = real();
            else if (key == "M") cfg.M = real();
            else if (key == "tau_star") cfg.tau_star = real();
            else if (key == "mu") cfg.mu = real();
            else if (key == "delta") cfg.delta = real();
            else if (key == "nbar") cfg.nbar = detail::parse_positive(val, lineno, key);
            else unknown();
        } else if (section == "windows") {
            if (key == "t_id") cfg.t_id = real();
            else if (key == "t_cert") cfg.t_cert = real();
            else if (key == "t_sim") cfg.t_sim = real();
            else unknown();
        } else if (section == "output") {
            if (key == "norm") {
                try {
                    cfg.norm = parse_norm(val);
                } catch (const std::invalid_argument& e) {
                    throw ParseError(e.what(), lineno);
                }
            } else if (key == "dir") cfg.out_dir = val;
            else if (key == "rcond") cfg.rcond = real();
            else unknown();
        }
    }

    if (!terms.empty()) {
        const std::size_t d = dim.value_or(terms.front().exps.size());
        PolynomialField field(d);
        for (const auto& t : terms) {
            if (t.exps.size() != d)
                throw ParseError("term has " + std::to_string(t.exps.size()) + " exponents, expected " + std::to_string(d),
                                 t.line);
            if (t.coeffs.size() != d)
                throw ParseError("term has " + std::to_string(t.coeffs.size()) + " coefficients, expected " +
                                     std::to_string(d),
                                 t.line);
            MultiIndex alpha{t.exps};
            if (alpha.degree() == 0) throw ParseError("constant term is not allowed", t.line);
            field.add_term(alpha, Eigen::Map<const Eigen::VectorXd>(t.coeffs.data(), static_cast<Eigen::Index>(d)));
        }
        cfg.field = std::move(field);
    } else if (dim) {
        throw ParseError("[field] declares dim but no term lines", 0);
    }

    if (cfg.field && !lower_set && !upper_set && cfg.field->dim() != 2) {
        const auto d = static_cast<Eigen::Index>(cfg.field->dim());
        cfg.sampler.lower = Eigen::VectorXd::Constant(d, -1.0);
        cfg.sampler.upper = Eigen::VectorXd::Constant(d, 1.0);
    }
    if (cfg.n_min > cfg.n_max) throw ParseError("n_min exceeds n_max", 0);
    if (!(cfg.h > 0.0)) throw ParseError("grid step h must be positive", 0);
    if (!(cfg.t_record > 0.0)) throw ParseError("t_record must be positive", 0);
    if (!(cfg.t_sim > 0.0)) throw ParseError("t_sim must be positive", 0);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

/// The Van der Pol replication setup, used when no config file is given.
inline constexpr std::string_view default_config_text = R"(# Van der Pol replication defaults
[field]
dim = 2
f: 0 1 -> 1 -1
f: 1 0 -> 0 -1
f: 2 1 -> 0 1

[sampler]
count = 209
lower = -1 -1
upper = 1 1
seed = 20230101

[grid]
h = 0.01
t_record = 10

[lifting]
n_min = 1
n_max = 12
overlay_orders = 2 5 11
overlay_trajectory = 0

[bounds]
C = 33.7
R = 4.1
C0 = 0.001
M = 1.5
tau_star = 0.2
mu = 0.9946
nbar = 13
delta = inf

[windows]
t_id = 10
t_sim = 20

[output]
norm = inf
dir = out
)";

inline ExperimentConfig default_config() { return parse_config(std::string(default_config_text)); }

}  // namespace carlid
