// schwartz: run experiments, acceptance suites and list presets.
//
// Exit codes: 0 ok, 1 usage/schema error, 2 not converged, 3 blow-up abort.

#include "schwartz/experiment.hpp"
#include "schwartz/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

int main(int argc, char** argv) {
    using namespace schwartz;
    CLI::App app{"Schwartz-space seminorm solver and bound checker"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run an experiment from a TOML/JSON config");
    run->add_option("config", config_path, "config file")->required();

    std::string suite;
    auto* verify = app.add_subcommand("verify", "run an acceptance suite, print a JSON verdict");
    verify->add_option("suite", suite, "propagators | bounds | burgers | vorticity | all")->required();

    auto* presets_cmd = app.add_subcommand("presets", "preset operations");
    presets_cmd->require_subcommand(1);
    auto* list = presets_cmd->add_subcommand("list", "list the named presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*list) {
        for (const auto& p : presets()) std::cout << p.name << "\t" << p.description << "\n";
        return 0;
    }

    if (*verify) {
        const auto& names = suite_names();
        if (std::find(names.begin(), names.end(), suite) == names.end()) {
            std::cerr << "unknown suite '" << suite << "'; expected one of:";
            for (const auto& s : names) std::cerr << " " << s;
            std::cerr << "\n";
            return 1;
        }
        const auto report = run_suite(suite);
        std::cout << report.to_json().dump(2) << "\n";
        // Failing checks are verdict entries, not process errors.
        return 0;
    }

    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    try {
        const auto result = run_experiment(cfg);
        std::cerr << "artifacts: " << result.directory << "\n";
        if (result.exit_code == 2) std::cerr << "refinement did not converge\n";
        if (result.exit_code == 3) std::cerr << "aborted: " << result.summary["abort"].dump() << "\n";
        return result.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
