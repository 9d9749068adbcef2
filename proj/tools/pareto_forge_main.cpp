// pareto-forge: multi-objective training and analysis from JSON configs.
//
//   pareto-forge solve   --config run.json [--seed N] [--out-dir DIR]
//   pareto-forge sweep   --config sweep.json [--jobs N] [--epsilon E] [--out-dir DIR]
//   pareto-forge filter  --in points.csv --out filtered.csv [--epsilon E]
//   pareto-forge metrics --checkpoint model.bin [--out metrics.json]
//   pareto-forge report  --archive archive.json --out-dir DIR [--problem NAME]

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pareto_forge/cli.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericError = 3, kIoError = 4 };

int guarded(const std::function<void()>& body) {
    try {
        body();
        return kOk;
    } catch (const pforge::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const pforge::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const std::domain_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const pforge::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-objective Chebyshev/augmented-Lagrangian training toolkit"};
    app.require_subcommand(1);

    std::string config_path, in_path, out_path, checkpoint_path, archive_path, problem_name;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::optional<int> jobs;

    auto add_common = [&](CLI::App* cmd, bool with_config) {
        if (with_config)
            cmd->add_option("--config", config_path, "JSON config file")->required();
        cmd->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { seed = v; },
                                                "override the config seed");
        cmd->add_option_function<double>("--epsilon", [&](double v) { epsilon = v; },
                                         "override the archive/filter epsilon");
        cmd->add_option("--out-dir", out_dir, "override the config out_dir");
    };

    auto* solve = app.add_subcommand("solve", "single preference-vector solve");
    add_common(solve, true);

    auto* sweep = app.add_subcommand("sweep", "preference-vector sweep into a Pareto archive");
    add_common(sweep, true);
    sweep->add_option_function<int>("--jobs", [&](int v) { jobs = v; },
                                    "parallel runs (default: PARETO_FORGE_JOBS or 1)");

    auto* filter = app.add_subcommand("filter", "epsilon-nondominance filter over a points CSV");
    filter->add_option("--in", in_path, "input points CSV")->required();
    filter->add_option("--out", out_path, "output CSV")->required();
    filter->add_option_function<double>("--epsilon", [&](double v) { epsilon = v; },
                                        "filter epsilon (default 0)");

    auto* metrics = app.add_subcommand("metrics", "SR/CR/PS metrics of a checkpoint");
    metrics->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    metrics->add_option("--out", out_path, "write metrics JSON here (default: stdout)");

    auto* report = app.add_subcommand("report", "front report over an archive JSON");
    report->add_option("--archive", archive_path, "archive JSON")->required();
    report->add_option("--out-dir", out_dir, "output directory")->required();
    report->add_option("--problem", problem_name, "analytic problem for front distances");

    CLI11_PARSE(app, argc, argv);

    pforge::cli::Overrides over;
    over.seed = seed;
    over.epsilon = epsilon;
    over.jobs = jobs;
    if (!out_dir.empty()) over.out_dir = out_dir;

    if (solve->parsed())
        return guarded([&] { pforge::cli::run_solve(pforge::cli::load_config(config_path), over); });
    if (sweep->parsed())
        return guarded([&] { pforge::cli::run_sweep(pforge::cli::load_config(config_path), over); });
    if (filter->parsed())
        return guarded([&] { pforge::cli::run_filter(in_path, out_path, epsilon.value_or(0.0)); });
    if (metrics->parsed())
        return guarded([&] {
            const auto j = pforge::cli::run_metrics(checkpoint_path);
            if (out_path.empty())
                std::cout << j.dump(2) << "\n";
            else
                pforge::write_text_file(out_path, j.dump(2) + "\n");
        });
    if (report->parsed())
        return guarded([&] { pforge::cli::run_report(archive_path, out_dir, problem_name); });
    return kConfigError;
}
