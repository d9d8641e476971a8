#pragma once

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>

#include "kinmarket/error.hpp"
#include "kinmarket/experiments.hpp"

namespace kinmarket::cli {

enum ExitCode : int { ok = 0, config_failure = 1, numerical_failure = 2 };

inline int exit_code_for(const Error& e) {
    const std::string c = e.category();
    return c == "numerical" || c == "invariant" ? numerical_failure : config_failure;
}

inline std::string preset_description(const std::string& name) {
    if (name == "test1") return "chartists only, constant herding; equilibrium and lognormal price checks";
    if (name == "test2") return "chartists and fundamentalists at 50/50, no switching; Pareto price tail";
    if (name == "test3a") return "strategy switching, alpha1=0.2 alpha2=0.55";
    if (name == "test3b") return "strategy switching, alpha1=0.2 alpha2=0.7";
    if (name == "test3c") return "strategy switching, alpha1=0.5 alpha2=0.4";
    return "";
}

/// Entry point shared by the executable and the tests.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout,
                std::ostream& err = std::cerr) {
    CLI::App app{"Kinetic chartist-fundamentalist market simulator"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run a preset or a configuration file");
    std::optional<std::string> preset_name, config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iters, n_agents, n_price;
    std::optional<double> zeta2;
    std::optional<bool> pin_mean;
    std::optional<unsigned> threads;
    run_cmd->add_option("--preset", preset_name, "test1|test2|test3a|test3b|test3c");
    run_cmd->add_option("--config", config_path, "flat key=value configuration file");
    run_cmd->add_option("--seed", seed, "RNG seed");
    run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_option("--iters", iters, "number of iterations");
    run_cmd->add_option("--n-agents", n_agents, "number of agents N");
    run_cmd->add_option("--n-price-samples", n_price, "number of price samples N_s");
    run_cmd->add_option("--zeta2", zeta2, "price noise variance");
    run_cmd->add_option("--pin-mean", pin_mean, "recenter chartist propensities each step (0|1)");
    run_cmd->add_option("--parallel", threads, "worker threads (0 or 1: sequential)");

    auto* list_cmd = app.add_subcommand("preset-list", "list the built-in presets");

    auto* analyze_cmd = app.add_subcommand("analyze", "recompute statistics from a saved run");
    std::string analyze_dir;
    analyze_cmd->add_option("dir", analyze_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return ok;
        }
        err << "ERROR:usage:" << e.what() << '\n';
        return config_failure;
    }

    try {
        if (*list_cmd) {
            for (const auto& n : preset_names()) out << std::left << std::setw(8) << n << preset_description(n) << '\n';
            return ok;
        }
        if (*analyze_cmd) {
            const auto sum = analyze(analyze_dir);
            sum.write(out);
            return ok;
        }

        std::map<std::string, std::string> kv;
        if (config_path) {
            auto is = io::open_in(*config_path);
            kv = parse_key_values(is);
        }
        if (preset_name) kv["preset"] = *preset_name;
        if (!kv.count("preset") && !config_path)
            throw ConfigError("run needs --preset or --config");
        if (seed) kv["seed"] = std::to_string(*seed);
        if (out_dir) kv["out"] = *out_dir;
        if (iters) kv["iters"] = std::to_string(*iters);
        if (n_agents) kv["n_agents"] = std::to_string(*n_agents);
        if (n_price) kv["n_price_samples"] = std::to_string(*n_price);
        if (zeta2) kv["zeta2"] = io::format_double(*zeta2);
        if (pin_mean) kv["pin_mean"] = *pin_mean ? "1" : "0";
        if (threads) kv["parallel"] = std::to_string(*threads);

        const auto cfg = config_from_key_values(kv);
        const auto res = run_experiment(cfg);
        res.summary.write(out);
        return ok;
    } catch (const Error& e) {
        err << "ERROR:" << e.category() << ':' << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "ERROR:internal:" << e.what() << '\n';
        return numerical_failure;
    }
}

} // namespace kinmarket::cli
