#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "carlid/carlid.hpp"

namespace {

struct GlobalFlags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::string> data;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> norm;
    bool quiet = false;
};

carlid::ExperimentConfig load(const GlobalFlags& g, bool allow_default) {
    carlid::ExperimentConfig cfg;
    if (!g.config.empty()) cfg = carlid::load_config(g.config);
    else if (allow_default) cfg = carlid::default_config();
    else throw std::invalid_argument("--config PATH is required");
    if (g.seed) cfg.sampler.seed = *g.seed;
    if (g.norm) cfg.norm = carlid::parse_norm(*g.norm);
    if (g.out) cfg.out_dir = *g.out;
    return cfg;
}

carlid::CommandOptions options(const GlobalFlags& g, const carlid::ExperimentConfig& cfg) {
    carlid::CommandOptions o;
    o.out_dir = cfg.out_dir;
    if (g.data) o.data_dir = *g.data;
    o.quiet = g.quiet;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Carleman-lifting system identification with a-priori error certificates"};
    app.require_subcommand(1);
    GlobalFlags g;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", g.config, "configuration file");
        if (needs_config) c->required();
        sub->add_option("--out", g.out, "output directory (overrides [output] dir)");
        sub->add_option("--seed", g.seed, "sampler seed (overrides [sampler] seed)");
        sub->add_option("--norm", g.norm, "matrix/vector norm")->check(CLI::IsMember({"inf", "two"}));
        sub->add_flag("--quiet", g.quiet, "suppress progress output");
    };

    auto* gen = app.add_subcommand("generate", "simulate the configured field and write a trajectory dataset");
    add_common(gen, true);
    auto* ident = app.add_subcommand("identify", "fit lifted models for each order and tabulate realized errors");
    add_common(ident, true);
    ident->add_option("--data", g.data, "dataset directory (default <out>/dataset)");
    auto* cert = app.add_subcommand("certify", "run the order search and report the certified bound");
    add_common(cert, true);
    cert->add_option("--data", g.data, "dataset directory (default <out>/dataset)");
    auto* rep = app.add_subcommand("replicate", "generate, identify and certify with the built-in Van der Pol setup");
    add_common(rep, false);
    auto* val = app.add_subcommand("validate", "echo the configuration and derived constants");
    add_common(val, true);
    auto* ver = app.add_subcommand("version", "print the version");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ver->parsed()) {
            std::cout << carlid::version_string << "\n";
            return carlid::exit_ok;
        }
        const auto cfg = load(g, rep->parsed());
        const auto opt = options(g, cfg);
        if (gen->parsed()) return carlid::cmd_generate(cfg, opt, std::cout);
        if (ident->parsed()) return carlid::cmd_identify(cfg, opt, std::cout);
        if (cert->parsed()) return carlid::cmd_certify(cfg, opt, std::cout);
        if (rep->parsed()) return carlid::cmd_replicate(cfg, opt, std::cout);
        if (val->parsed()) return carlid::cmd_validate(cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return carlid::exit_error;
    }
    return carlid::exit_error;
}
