#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stratify/error.hpp"
#include "stratify/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Joint stratification and minimum sample allocation under CV constraints"};

    std::string config_path;
    app.add_option("--config", config_path, "Flat key = value config file; flags override it");

    // Every value flag maps onto the config key of the same name.
    const std::vector<std::pair<std::string, std::string>> value_flags = {
        {"frame", "Frame CSV"},
        {"targets", "Comma-separated target columns"},
        {"aux", "Comma-separated auxiliary columns"},
        {"domain-col", "Domain column (omit for a single domain)"},
        {"id-col", "Identifier column"},
        {"constraints", "Constraints CSV: DOMAIN then one CV column per target"},
        {"algorithm", "ga | gga | bruteforce"},
        {"pop", "Population size"},
        {"iters", "Generations"},
        {"elitism", "Elitism rate"},
        {"mutation", "Mutation probability"},
        {"inversion", "Inversion probability (gga)"},
        {"min-units", "Minimum sample per stratum"},
        {"max-iter", "Allocation fixed-point iteration cap"},
        {"seed", "Root RNG seed"},
        {"jobs", "Domains solved concurrently"},
        {"stop-at", "Stop once this fitness is reached"},
        {"out", "Output directory"},
        {"delimiter", "Field delimiter (single character or 'tab')"},
        {"discretize", "Continuous aux columns to cluster, e.g. POPTOT=18,WOOD=3"},
        {"cost-fixed", "Fixed cost C0"},
        {"cost-unit", "Per-unit interview cost"},
        {"evaluate-reps", "Repeated samples for the expected-CV check (0 = skip)"},
        {"bench-reps", "Timed allocation calls per domain (0 = skip)"},
    };
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> options;
    for (const auto& [name, help] : value_flags)
        options[name] = app.add_option("--" + name, flag_values[name], help);

    std::vector<double> cv;
    auto* cv_option = app.add_option("--cv", cv, "CV limit; repeat once per target or give once for all");
    bool drop_missing = false, allow_large = false;
    auto* drop_option = app.add_flag("--drop-missing", drop_missing, "Drop rows with missing values instead of failing");
    auto* large_option = app.add_flag("--allow-large", allow_large, "Allow brute force above 15 atomic strata");

    CLI11_PARSE(app, argc, argv);

    try {
        std::map<std::string, std::string> values;
        if (!config_path.empty()) values = stratify::read_config_file(config_path);
        for (const auto& [name, option] : options)
            if (option->count() > 0) values[name] = flag_values[name];
        if (cv_option->count() > 0) {
            std::string joined;
            for (double v : cv) joined += (joined.empty() ? "" : ",") + std::to_string(v);
            values["cv"] = joined;
        }
        if (drop_option->count() > 0) values["drop-missing"] = drop_missing ? "true" : "false";
        if (large_option->count() > 0) values["allow-large"] = allow_large ? "true" : "false";

        stratify::RunConfig config;
        stratify::apply_config(config, values);
        const auto summary = stratify::run(config);
        stratify::print_summary(std::cout, summary);
        if (!config.out_dir.empty()) std::cout << "wrote " << config.out_dir.string() << '\n';
    } catch (const stratify::Error& e) {
        std::cerr << "error [" << stratify::to_string(e.kind()) << "]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
