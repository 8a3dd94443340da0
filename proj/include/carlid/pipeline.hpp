#pragma once

// Command implementations behind the carlid CLI. Each command writes
// write-once files under an output directory and returns a process exit code.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "config.hpp"
#include "experiment.hpp"
#include "io.hpp"
#include "simulate.hpp"
#include "svg.hpp"

namespace carlid {

inline constexpr const char* version_string = "carlid 1.0.0";

enum ExitCode : int {
    exit_ok = 0,
    exit_error = 1,
    exit_failed = 2,             // certification ran and min Theta > Delta
    exit_invalid_parameters = 3, // an admissibility condition is violated
};

struct CommandOptions {
    fs::path out_dir = "out";
    std::optional<fs::path> data_dir;  // defaults to out_dir / "dataset"
    bool quiet = false;

    fs::path dataset_dir() const { return data_dir.value_or(out_dir / "dataset"); }
};

namespace detail {

inline std::string order_tag(unsigned n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "N%02u", n);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return colors[i % 6];
}

class Reporter {
public:
    Reporter(std::ostream& out, bool quiet) : out_(out), quiet_(quiet) {}
    template <typename T>
    Reporter& operator<<(const T& v) {
        if (!quiet_) out_ << v;
        return *this;
    }

private:
    std::ostream& out_;
    bool quiet_;
};

inline GeneratedDataset generate_from_config(const ExperimentConfig& cfg) {
    if (!cfg.field) throw std::invalid_argument("generate needs a [field] section with term lines");
    if (cfg.sampler.count == 0) throw std::invalid_argument("[sampler] count must be positive");
    return generate_dataset(*cfg.field, cfg.sampler, cfg.record_grid(), cfg.amplitude_bound(), cfg.norm);
}

inline void write_dataset(const fs::path& dir, const ExperimentConfig& cfg, const GeneratedDataset& g) {
    DatasetInfo info{cfg.sampler.seed, cfg.field ? cfg.field->describe() : std::string("unknown"), g.rejected.size(),
                     cfg.hash()};
    write_trajectory_set(dir, g.set, info);
}

inline DiagnosticsConfig diagnostics_from(const ExperimentConfig& cfg) {
    DiagnosticsConfig d;
    d.n_min = cfg.n_min;
    d.n_max = cfg.n_max;
    d.fit_window = Window{0.0, cfg.identification_window()};
    d.t_cert = cfg.tau_star.value_or(0.2);
    d.t_sim = cfg.t_sim;
    d.norm = cfg.norm;
    d.rcond = cfg.rcond;
    d.overlay_orders = cfg.overlay_orders;
    d.overlay_trajectory = cfg.overlay_trajectory;
    return d;
}

inline SearchConfig search_from(const ExperimentConfig& cfg) {
    SearchConfig s;
    s.norm = cfg.norm;
    s.rcond = cfg.rcond;
    s.t_id = cfg.t_cert;
    return s;
}

inline void write_overlay(const fs::path& dir, const std::string& stem, const Overlay& ov, const ExperimentConfig& cfg,
                          Manifest& man, bool with_svg) {
    const auto d = ov.truth.cols();
    std::vector<std::string> header{"t"};
    for (Eigen::Index j = 0; j < d; ++j) header.push_back("x" + std::to_string(j + 1));
    for (Eigen::Index j = 0; j < d; ++j) header.push_back("zhat" + std::to_string(j + 1));
    for (Eigen::Index j = 0; j < d; ++j) header.push_back("z" + std::to_string(j + 1));
    {
        CsvWriter w(dir / (stem + ".csv"), header);
        std::vector<double> row(static_cast<std::size_t>(1 + 3 * d));
        for (std::size_t k = 0; k < ov.t.size(); ++k) {
            const auto ki = static_cast<Eigen::Index>(k);
            row[0] = ov.t[k];
            for (Eigen::Index j = 0; j < d; ++j) {
                row[static_cast<std::size_t>(1 + j)] = ov.truth(ki, j);
                row[static_cast<std::size_t>(1 + d + j)] = ov.identified(ki, j);
                row[static_cast<std::size_t>(1 + 2 * d + j)] = ov.model_based(ki, j);
            }
            w.row(row);
        }
    }
    man.add_file(stem + ".csv", cfg.hash());
    if (!with_svg) return;

    svg::Plot plot{"Trajectories, N = " + std::to_string(ov.N), "t", "state", false, {}};
    for (Eigen::Index j = 0; j < std::min<Eigen::Index>(d, 2); ++j) {
        auto col = [&](const Eigen::MatrixXd& m) {
            std::vector<double> v(static_cast<std::size_t>(m.rows()));
            for (Eigen::Index k = 0; k < m.rows(); ++k) v[static_cast<std::size_t>(k)] = m(k, j);
            return v;
        };
        const std::string idx = std::to_string(j + 1);
        plot.series.push_back({"x" + idx + " nonlinear", ov.t, col(ov.truth), palette(0), j == 1});
        plot.series.push_back({"x" + idx + " identified", ov.t, col(ov.identified), palette(1), j == 1});
        plot.series.push_back({"x" + idx + " Carleman", ov.t, col(ov.model_based), palette(2), j == 1});
    }
    svg::write(dir / (stem + ".svg"), plot);
}

inline std::vector<double> orders_of(const IdentificationRun& run) {
    std::vector<double> v;
    for (const auto& r : run.rows) v.push_back(r.N);
    return v;
}

inline void write_error_tables(const fs::path& dir, const IdentificationRun& run, const ExperimentConfig& cfg,
                               Manifest& man, bool with_svg) {
    {
        CsvWriter w(dir / "fig4_realized_error.csv",
                    {"N", "identified_cert", "model_based_cert", "identified_sim", "model_based_sim"});
        for (const auto& r : run.rows)
            w.row(r.N, r.cert.identified, r.cert.model_based, r.sim.identified, r.sim.model_based);
        man.add_file("fig4_realized_error.csv", cfg.hash());
    }
    {
        CsvWriter w(dir / "fig5_full_state_error.csv", {"N", "full_state_cert", "full_state_sim", "finite"});
        for (const auto& r : run.rows)
            w.row(r.N, r.cert.full_state, r.sim.full_state, r.identified_finite && r.model_based_finite);
        man.add_file("fig5_full_state_error.csv", cfg.hash());
    }
    {
        CsvWriter w(dir / "fig6_truncated_state_error.csv", {"N", "truncated_cert", "truncated_sim", "finite"});
        for (const auto& r : run.rows)
            w.row(r.N, r.cert.truncated, r.sim.truncated, r.identified_finite && r.model_based_finite);
        man.add_file("fig6_truncated_state_error.csv", cfg.hash());
    }
    {
        CsvWriter w(dir / "identify_errors.csv",
                    {"N", "lifted_dim", "condition_number", "residual_norm", "full_row_rank", "identified_cert",
                     "model_based_cert", "full_state_cert", "truncated_cert", "identified_sim", "model_based_sim",
                     "full_state_sim", "truncated_sim"});
        for (const auto& r : run.rows)
            w.row(r.N, r.lifted_dim, r.condition_number, r.residual_norm, r.full_row_rank, r.cert.identified,
                  r.cert.model_based, r.cert.full_state, r.cert.truncated, r.sim.identified, r.sim.model_based,
                  r.sim.full_state, r.sim.truncated);
        man.add_file("identify_errors.csv", cfg.hash());
    }
    if (!with_svg) return;

    const auto ns = orders_of(run);
    auto pick = [&](auto get) {
        std::vector<double> v;
        for (const auto& r : run.rows) v.push_back(get(r));
        return v;
    };
    const std::string cert = "[0, " + format_real(cfg.tau_star.value_or(0.2)) + "]";
    const std::string sim = "[0, " + format_real(run.horizon) + "]";
    svg::write(dir / "fig4_realized_error.svg",
               {"Realized error vs truncation order", "N", "sup ||x - z|_d||", true,
                {{"identified " + cert, ns, pick([](const ErrorRow& r) { return r.cert.identified; }), palette(1), false, true},
                 {"Carleman " + cert, ns, pick([](const ErrorRow& r) { return r.cert.model_based; }), palette(2), false, true},
                 {"identified " + sim, ns, pick([](const ErrorRow& r) { return r.sim.identified; }), palette(1), true, true},
                 {"Carleman " + sim, ns, pick([](const ErrorRow& r) { return r.sim.model_based; }), palette(2), true, true}}});
    svg::write(dir / "fig5_full_state_error.svg",
               {"Full-state error ||z - zhat||", "N", "sup ||z - zhat||", true,
                {{cert, ns, pick([](const ErrorRow& r) { return r.cert.full_state; }), palette(0), false, true},
                 {sim, ns, pick([](const ErrorRow& r) { return r.sim.full_state; }), palette(3), true, true}}});
    svg::write(dir / "fig6_truncated_state_error.svg",
               {"Truncated-state error ||z|_d - zhat|_d||", "N", "sup ||z|_d - zhat|_d||", true,
                {{cert, ns, pick([](const ErrorRow& r) { return r.cert.truncated; }), palette(0), false, true},
                 {sim, ns, pick([](const ErrorRow& r) { return r.sim.truncated; }), palette(3), true, true}}});
}

inline void write_curve(const fs::path& path, const SearchResult& res) {
    CsvWriter w(path, {"N", "carleman_term", "Abar", "Bbar", "zbar", "theta", "certifiable", "condition_number",
                       "log10_theta"});
    for (const auto& e : res.curve)
        w.row(e.bound.N, e.bound.carleman_term, e.bound.abar, e.bound.bbar, e.bound.zbar, e.bound.theta,
              e.certifiable, e.condition_number, e.bound.log10_theta);
}

inline void write_curve_inputs(const fs::path& path, const SearchResult& res) {
    CsvWriter w(path, {"N", "eps_norm", "Ieps_norm", "Ibar", "IGamma_norm", "D_data_norm", "zbar", "expAhat_norm",
                       "note"});
    for (const auto& e : res.curve)
        w.row(e.bound.N, e.inputs.eps_norm, e.inputs.ieps_norm, e.inputs.ibar, e.inputs.igamma_norm,
              e.inputs.d_data_norm, e.inputs.zbar, e.inputs.exp_ahat_norm,
              e.note.empty() ? std::string("-") : "\"" + e.note + "\"");
}

inline void write_model_bound(const fs::path& path, const BoundParameters& p) {
    CsvWriter w(path, {"N", "carleman_term"});
    for (unsigned n = 1; n <= p.Nbar; ++n) w.row(n, carleman_error_bound(p, n));
}

inline void plot_bounds(const fs::path& path, const SearchResult& res, const BoundParameters& p) {
    std::vector<double> ns, data, model;
    for (const auto& e : res.curve) {
        ns.push_back(e.bound.N);
        data.push_back(e.certifiable ? e.bound.log10_theta : std::numeric_limits<double>::quiet_NaN());
        model.push_back(std::log10(carleman_error_bound(p, e.bound.N)));
    }
    svg::write(path, {"Certified bounds vs truncation order", "N", "log10 bound", false,
                      {{"data-driven Theta(N)", ns, data, palette(1), false, true},
                       {"model-based D mu^N", ns, model, palette(2), true, true}}});
}

inline void write_model(const fs::path& dir, const IdentifiedModel& model, const ExperimentConfig& cfg,
                        Manifest& man, const std::string& name) {
    write_matrix_csv(dir / (name + ".csv"), model.ahat);
    Manifest mm;
    mm.set("kind", std::string("identified_model"));
    mm.set("d", std::to_string(model.basis.dim()));
    mm.set("N", std::to_string(model.basis.order()));
    mm.set("lifted_dim", std::to_string(model.basis.size()));
    mm.set("window_start", model.window.start);
    mm.set("window_end", model.window.end);
    mm.set("condition_number", model.condition_number);
    mm.set("residual_norm", model.residual_norm);
    mm.set("rank", std::to_string(model.rank));
    mm.set("certifiable", std::string(model.full_row_rank ? "true" : "false"));
    mm.set("config_hash", cfg.hash());
    mm.add_file(name + ".csv", cfg.hash());
    mm.write(dir / (name + ".manifest"));
    man.add_file(name + ".csv", cfg.hash());
}

inline void print_parameters(Reporter& out, const BoundParameters& p) {
    out << "  D_M = " << format_real(p.D_M) << "\n  D = " << format_real(p.D)
        << "\n  tau* limit = " << format_real(p.tau_limit) << "\n  mu limit = " << format_real(p.mu_limit) << "\n";
}

}  // namespace detail

inline int cmd_generate(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log) {
    detail::Reporter out(log, opt.quiet);
    const GeneratedDataset g = detail::generate_from_config(cfg);
    detail::write_dataset(opt.dataset_dir(), cfg, g);
    out << "generated " << g.set.size() << " trajectories (" << g.rejected.size() << " rejected by M = "
        << format_real(cfg.amplitude_bound()) << ") -> " << opt.dataset_dir().string() << "\n";
    return exit_ok;
}

inline int cmd_identify(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log) {
    detail::Reporter out(log, opt.quiet);
    const TrajectorySet data = read_trajectory_set(opt.dataset_dir());
    fs::create_directories(opt.out_dir / "models");
    DiagnosticsConfig dc = detail::diagnostics_from(cfg);
    dc.overlay_orders.clear();
    for (unsigned n = cfg.n_min; n <= cfg.n_max; ++n) dc.overlay_orders.push_back(n);
    const IdentificationRun run = run_identification(data, cfg.field, dc);

    Manifest man;
    man.set("command", std::string("identify"));
    man.set("config_hash", cfg.hash());
    detail::write_error_tables(opt.out_dir, run, cfg, man, false);
    for (const auto& ov : run.overlays)
        detail::write_overlay(opt.out_dir, "trajectories_" + detail::order_tag(ov.N), ov, cfg, man, false);
    for (const auto& model : run.models)
        detail::write_model(opt.out_dir / "models", model, cfg, man, "model_" + detail::order_tag(model.basis.order()));
    man.write(opt.out_dir / "manifest.txt");

    for (const auto& r : run.rows) {
        out << "N = " << r.N << "  sup error [0," << format_real(dc.t_cert) << "] = " << format_real(r.cert.identified)
            << "  cond = " << format_real(r.condition_number);
        if (!r.identified_finite) out << "  (identified simulation unstable)";
        out << "\n";
    }
    return exit_ok;
}

inline int cmd_certify(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log) {
    detail::Reporter out(log, opt.quiet);
    const auto check = validate_parameters(cfg.raw_bounds());
    if (!check.ok()) {
        log << "parameter validation failed:\n";
        for (const auto& v : check.violations) log << "  Ensure " << to_string(v.clause) << ": " << v.message << "\n";
        return exit_invalid_parameters;
    }
    const BoundParameters& p = *check.params;
    const TrajectorySet data = read_trajectory_set(opt.dataset_dir());
    if (!(data.sup_norm() < p.M)) {
        log << "parameter validation failed:\n  Ensure " << to_string(Ensure::m_gt_data_sup) << ": data reaches "
            << format_real(data.sup_norm()) << ", M = " << format_real(p.M) << "\n";
        return exit_invalid_parameters;
    }
    const SearchResult res = order_search(data, p, detail::search_from(cfg));

    fs::create_directories(opt.out_dir);
    Manifest man;
    man.set("command", std::string("certify"));
    man.set("config_hash", cfg.hash());
    man.set("verdict", res.verdict);
    detail::write_curve(opt.out_dir / "curve.csv", res);
    man.add_file("curve.csv", cfg.hash());
    detail::write_curve_inputs(opt.out_dir / "curve_inputs.csv", res);
    man.add_file("curve_inputs.csv", cfg.hash());
    if (cfg.field) {
        detail::write_model_bound(opt.out_dir / "model_based_bound.csv", p);
        man.add_file("model_based_bound.csv", cfg.hash());
    }
    if (res.certified) detail::write_model(opt.out_dir, *res.model_at(*res.nstar), cfg, man, "model_Nstar");
    man.write(opt.out_dir / "manifest.txt");

    if (res.certified) {
        const auto& b = res.best()->bound;
        out << "certified: N* = " << *res.nstar << ", Theta(N*) = " << format_real(b.theta)
            << " (log10 " << format_real(b.log10_theta) << ") <= Delta = " << format_real(p.Delta) << "\n";
        return exit_ok;
    }
    out << res.verdict;
    if (res.nstar) out << " (N* = " << *res.nstar << ", log10 Theta = " << format_real(res.best()->bound.log10_theta) << ")";
    out << "; curve written to " << (opt.out_dir / "curve.csv").string() << "\n";
    return exit_failed;
}

inline int cmd_replicate(const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& log) {
    detail::Reporter out(log, opt.quiet);
    const auto check = validate_parameters(cfg.raw_bounds());
    if (!check.ok()) {
        log << "parameter validation failed:\n";
        for (const auto& v : check.violations) log << "  Ensure " << to_string(v.clause) << ": " << v.message << "\n";
        return exit_invalid_parameters;
    }
    const BoundParameters& p = *check.params;
    const fs::path dir = opt.out_dir;
    fs::create_directories(dir / "models");

    const GeneratedDataset g = detail::generate_from_config(cfg);
    detail::write_dataset(dir / "dataset", cfg, g);
    out << "dataset: " << g.set.size() << " trajectories, " << g.rejected.size() << " rejected\n";

    Manifest man;
    man.set("command", std::string("replicate"));
    man.set("config_hash", cfg.hash());
    man.set("seed", std::to_string(cfg.sampler.seed));
    man.set("trajectories", std::to_string(g.set.size()));

    const IdentificationRun run = run_identification(g.set, cfg.field, detail::diagnostics_from(cfg));
    detail::write_error_tables(dir, run, cfg, man, true);
    for (std::size_t i = 0; i < run.overlays.size(); ++i) {
        const auto& ov = run.overlays[i];
        detail::write_overlay(dir, "fig" + std::to_string(i + 1) + "_trajectories_" + detail::order_tag(ov.N), ov, cfg,
                              man, true);
    }
    for (const auto& model : run.models)
        detail::write_model(dir / "models", model, cfg, man, "model_" + detail::order_tag(model.basis.order()));

    const SearchResult res = order_search(g.set, p, detail::search_from(cfg));
    detail::write_curve(dir / "fig7_bound_curve.csv", res);
    man.add_file("fig7_bound_curve.csv", cfg.hash());
    detail::write_curve_inputs(dir / "fig7_bound_inputs.csv", res);
    man.add_file("fig7_bound_inputs.csv", cfg.hash());
    detail::write_model_bound(dir / "fig7_model_based_bound.csv", p);
    man.add_file("fig7_model_based_bound.csv", cfg.hash());
    detail::plot_bounds(dir / "fig7_bound_curve.svg", res, p);
    man.set("verdict", res.verdict);
    if (res.nstar) man.set("nstar", std::to_string(*res.nstar));
    man.write(dir / "manifest.txt");

    out << "N   sup|x-zhat| [0,tau*]   sup|x-z| [0,tau*]   sup|x-zhat| [0,t_sim]\n";
    for (const auto& r : run.rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-3u %-22.4e %-19.4e %.4e\n", r.N, r.cert.identified, r.cert.model_based,
                      r.sim.identified);
        out << buf;
    }
    out << "certificate: " << res.verdict;
    if (res.nstar) out << ", N* = " << *res.nstar << ", log10 Theta(N*) = " << format_real(res.best()->bound.log10_theta);
    out << "\noutputs in " << dir.string() << "\n";
    return exit_ok;
}

/// Echoes the parsed configuration and derived constants; never writes files.
inline int cmd_validate(const ExperimentConfig& cfg, std::ostream& log) {
    detail::Reporter out(log, false);
    out << "config hash: " << cfg.hash() << "\n";
    if (cfg.field) out << "field (d = " << cfg.field->dim() << "): " << cfg.field->describe() << "\n";
    else out << "field: none\n";
    out << "sampler: count = " << cfg.sampler.count << ", seed = " << cfg.sampler.seed << "\n";
    out << "grid: h = " << format_real(cfg.h) << ", t_record = " << format_real(cfg.t_record) << "\n";
    out << "orders: " << cfg.n_min << ".." << cfg.n_max << "\n";
    out << "windows: t_id = " << format_real(cfg.identification_window())
        << ", t_sim = " << format_real(cfg.t_sim) << "\n";
    out << "norm: " << to_string(cfg.norm) << "\n";

    const auto missing = cfg.missing_bound_keys();
    if (!missing.empty()) {
        out << "error: missing required key(s) in [bounds]:";
        for (const auto& k : missing) out << " " << k;
        out << "\n";
        return exit_error;
    }
    const auto raw = cfg.raw_bounds();
    const auto check = validate_parameters(raw);
    out << "bounds: C = " << format_real(raw.C) << ", R = " << format_real(raw.R) << ", C0 = " << format_real(raw.C0)
        << ", M = " << format_real(raw.M) << ", tau* = " << format_real(raw.tau_star)
        << ", mu = " << format_real(raw.mu) << ", Nbar = " << raw.Nbar << ", Delta = " << format_real(raw.Delta)
        << "\n";
    if (check.violations.empty() || !check.violates(Ensure::positive)) detail::print_parameters(out, derive_constants(raw));
    if (!check.ok()) {
        for (const auto& v : check.violations) out << "  Ensure " << to_string(v.clause) << ": " << v.message << "\n";
        return exit_invalid_parameters;
    }
    out << "all admissibility conditions hold\n";
    return exit_ok;
}

}  // namespace carlid
