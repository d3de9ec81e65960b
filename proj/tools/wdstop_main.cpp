// wdstop: analyze, sweep, verify and bernstein commands over a YAML or JSON config.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wdstop/cli/commands.hpp"

namespace {

using namespace wdstop::cli;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string format;
    std::optional<std::size_t> paths;
    std::optional<double> dt;
    std::optional<double> tmax;
    std::vector<double> epsilons;
};

AnalysisConfig resolve(const Options& o) {
    AnalysisConfig c = o.config.empty() ? parse_config("") : load_config(o.config);
    nlohmann::json j = nlohmann::json::parse(to_json(c).dump());
    auto& v = j["verify"];
    if (const char* env = std::getenv("WDSTOP_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            const unsigned long long s = std::stoull(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument(env);
            v["seed"] = s;
        } catch (const std::logic_error&) {
            throw ConfigError("WDSTOP_SEED", "seed must be a non-negative integer, got '" + std::string(env) + "'");
        }
    }
    if (o.seed) v["seed"] = *o.seed;
    if (o.threads) v["threads"] = *o.threads;
    if (o.paths) v["paths"] = *o.paths;
    if (o.dt) v["dt"] = *o.dt;
    if (o.tmax) v["tmax"] = *o.tmax;
    if (!o.epsilons.empty()) v["epsilons"] = o.epsilons;
    if (!o.out.empty()) j["output"]["report"] = o.out;
    return from_json(j);
}

Format pick_format(const std::string& flag, Format fallback) {
    if (flag.empty()) return fallback;
    return flag == "csv" ? Format::Csv : Format::Json;
}

bool write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return static_cast<bool>(std::cout);
    }
    std::ofstream f(path, std::ios::binary);
    f << text;
    return static_cast<bool>(f);
}

int run(const std::string& command, const Options& o) {
    std::optional<AnalysisConfig> cfg;
    CommandResult result;
    try {
        cfg = resolve(o);
        if (command == "analyze") result = cmd_analyze(*cfg, pick_format(o.format, Format::Json));
        else if (command == "sweep") result = cmd_sweep(*cfg, pick_format(o.format, Format::Csv));
        else if (command == "verify") result = cmd_verify(*cfg, pick_format(o.format, Format::Json));
        else result = cmd_bernstein(*cfg, pick_format(o.format, Format::Json));
    } catch (const std::exception& e) {
        result = error_result(command, e, cfg ? &*cfg : nullptr);
        std::cerr << "wdstop " << command << ": " << e.what() << "\n";
    }
    const std::string report_path = cfg ? cfg->output.report : o.out;
    if (!write_text(report_path, result.report)) {
        std::cerr << "wdstop: cannot write report to '" << report_path << "'\n";
        return exit_code::unexpected;
    }
    if (cfg && command == "sweep") {
        std::string plot = cfg->output.plot_data;
        if (plot.empty() && !report_path.empty()) plot = report_path + ".plot.csv";
        if (!plot.empty() && !write_text(plot, result.plot_data)) {
            std::cerr << "wdstop: cannot write plot data to '" << plot << "'\n";
            return exit_code::unexpected;
        }
    }
    if (result.exit_code == exit_code::conflict) std::cerr << "wdstop verify: verification conflicts with the verdict\n";
    return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-inconsistent optimal stopping under weighted discounting"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--config", o.config, "YAML or JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", o.out, "Report path (default: standard output)");
    app.add_option("--seed", o.seed, "Monte Carlo seed; overrides WDSTOP_SEED and the config");
    app.add_option("--threads", o.threads, "Worker threads, 0 = all cores");
    app.add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

    std::string command;
    for (const char* name : {"analyze", "sweep", "verify", "bernstein"}) {
        static const std::map<std::string, std::string> help = {
            {"analyze", "Solve for the threshold and classify it"},
            {"sweep", "Real-option margin over a parameter grid (CSV)"},
            {"verify", "Residual, scan and Monte Carlo checks of the verdict"},
            {"bernstein", "Finite-difference complete-monotonicity report of h"},
        };
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->callback([&command, name] { command = name; });
        if (std::string(name) == "verify") {
            sub->add_option("--paths", o.paths, "Simulated paths per estimate");
            sub->add_option("--dt", o.dt, "Fine time step");
            sub->add_option("--tmax", o.tmax, "Fixed horizon; 0 selects it automatically");
            sub->add_option("--epsilons", o.epsilons, "Spike widths, multiples of dt")->delimiter(',');
        }
    }

    CLI11_PARSE(app, argc, argv);
    return run(command, o);
}
