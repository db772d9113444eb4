// Experiment runner CLI: validate configs, run single experiments, sweep a
// parameter axis, and emit plot-ready series from a finished run.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/harness/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

std::vector<std::string> split_values(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated-learning simulator with channel-aware scheduling"};
    app.require_subcommand(1);

    std::size_t workers = 1;
    bool has_seed = false;
    std::uint64_t seed = 0;
    app.add_option("--workers", workers, "client-update worker threads")->capture_default_str();
    app.add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
        has_seed = true;
    });

    std::string run_config;
    auto* run_cmd = app.add_subcommand("run", "execute one experiment");
    run_cmd->fallthrough();
    run_cmd->add_option("config", run_config, "experiment config file")->required();

    std::string sweep_config, sweep_axis, sweep_values;
    double sweep_target = 0.95;
    auto* sweep_cmd = app.add_subcommand("sweep", "run the config once per axis value");
    sweep_cmd->fallthrough();
    sweep_cmd->add_option("config", sweep_config, "experiment config file")->required();
    sweep_cmd->add_option("--axis", sweep_axis, "parameter to vary: C, E, B or EB")->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated axis values")->required();
    sweep_cmd->add_option("--target", sweep_target, "target accuracy for rounds-to-target")
        ->required();

    std::string plot_dir;
    auto* plot_cmd = app.add_subcommand("plot", "emit accuracy.dat/loss.dat from a run directory");
    plot_cmd->add_option("run_dir", plot_dir, "directory containing metrics.csv")->required();

    std::string validate_config;
    auto* validate_cmd = app.add_subcommand("validate", "check a config without running it");
    validate_cmd->add_option("config", validate_config, "experiment config file")->required();

    CLI11_PARSE(app, argc, argv);

    fedsim::harness::RunOptions options;
    options.workers = workers;
    if (has_seed) options.seed_override = seed;

    try {
        if (*validate_cmd) {
            std::string text;
            try {
                text = fedsim::harness::read_text_file(validate_config);
            } catch (const fedsim::ParseError& e) {
                std::cerr << e.what() << '\n';
                return kExitRuntime;
            }
            auto violations = fedsim::harness::validate(text);
            if (violations.empty()) {
                std::cout << "ok\n";
                return kExitOk;
            }
            for (const auto& v : violations) std::cout << v << '\n';
            return kExitValidation;
        }

        if (*run_cmd) {
            auto result = fedsim::harness::run_file(run_config, options);
            std::cout << "run dir: " << result.run_dir << '\n'
                      << "rounds: " << result.rounds_completed << '\n'
                      << "stop: " << fedsim::fed::to_string(result.stop) << '\n'
                      << "final accuracy: "
                      << fedsim::harness::format_double(result.final_accuracy) << '\n';
            return kExitOk;
        }

        if (*sweep_cmd) {
            options.config_text = fedsim::harness::read_text_file(sweep_config);
            auto cfg = fedsim::harness::parse_config(options.config_text);
            auto result = fedsim::harness::sweep(cfg, sweep_axis, split_values(sweep_values),
                                                 sweep_target, options);
            std::cout << "summary: " << result.summary_path << '\n';
            for (const auto& row : result.rows) {
                std::cout << sweep_axis << "=" << row.value << " rounds_to_target="
                          << (row.rounds_to_target < 0 ? std::string("-")
                                                       : std::to_string(row.rounds_to_target))
                          << " final_accuracy="
                          << fedsim::harness::format_double(row.final_accuracy) << '\n';
            }
            return kExitOk;
        }

        if (*plot_cmd) {
            fedsim::harness::emit_plot_series(plot_dir);
            std::cout << "wrote " << plot_dir << "/accuracy.dat and " << plot_dir
                      << "/loss.dat\n";
            return kExitOk;
        }
    } catch (const fedsim::ParseError& e) {
        std::cerr << e.what() << '\n';
        return kExitValidation;
    } catch (const fedsim::InputError& e) {
        std::cerr << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
