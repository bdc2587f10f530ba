// moe-ecology: train and diagnose small hierarchical mixture-of-experts
// models with the expert-ecology toolkit.

#include <CLI11.hpp>
#include <iostream>

#include "moeeco/commands.hpp"
#include "moeeco/errors.hpp"

using namespace moeeco;

int main(int argc, char** argv) {
    CLI::App app{"expert-ecology MoE training and diagnostics"};
    app.require_subcommand(0, 1);

    bool print_config = false;
    app.add_flag("--print-config", print_config, "print the effective config and exit");

    CommonOpts common;
    std::string out_flag;
    bool have_out = false;
    std::uint64_t seed_flag = 0;
    bool have_seed = false;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "config file (key = value lines)");
        cmd->add_option("--set", common.overrides, "override: key=value")->take_all();
        cmd->add_option("--seed", seed_flag, "shorthand for train.seed")
            ->each([&](const std::string&) { have_seed = true; });
        cmd->add_option("--out", out_flag, "output root (overrides MOE_ECOLOGY_OUT)")
            ->each([&](const std::string&) { have_out = true; });
        cmd->add_flag("--print-config", print_config, "print the effective config and exit");
    };

    auto* train = app.add_subcommand("train", "run one training experiment");
    add_common(train);
    std::string resume_path;
    train->add_option("--resume", resume_path, "continue from a checkpoint (embedded config)");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_ckpt, eval_json;
    double eval_t = 0.0;
    bool have_eval_t = false;
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval->add_option("--t-eval", eval_t, "evaluation temperature")
        ->each([&](const std::string&) { have_eval_t = true; });
    eval->add_option("--json", eval_json, "write ecology report json here");

    auto* scan = app.add_subcommand("scan", "temperature sensitivity scan of a checkpoint");
    std::string scan_ckpt, scan_csv_path;
    std::vector<double> scan_temps;
    scan->add_option("--checkpoint", scan_ckpt, "checkpoint file")->required();
    scan->add_option("--temps", scan_temps, "temperatures (default 0.1 0.3 0.5 0.7 1 2 5)")
        ->take_all();
    scan->add_option("--csv", scan_csv_path, "csv output path");

    auto* sweep = app.add_subcommand("sweep", "one run per value of a config axis");
    add_common(sweep);
    std::string axis;
    std::vector<std::string> values;
    int parallelism = 1;
    sweep->add_option("--axis", axis, "config key to sweep")->required();
    sweep->add_option("--values", values, "axis values")->take_all();
    sweep->add_option("--parallel", parallelism, "worker count (default 1)");

    auto* report = app.add_subcommand("report", "render tables from run metrics");
    std::vector<std::string> run_dirs;
    std::string window, report_csv;
    report->add_option("--run", run_dirs, "run directories")->take_all();
    report->add_option("--window", window, "stability window first:last (epochs)");
    report->add_option("--csv", report_csv, "export per-epoch records csv");

    try {
        app.parse(argc, argv);
        if (have_seed) common.seed = seed_flag;
        if (have_out) common.out_dir = out_flag;

        if (print_config) {
            std::cout << resolve_config(common).canonical_text();
            return kExitOk;
        }
        if (train->parsed()) return cmd_train(common, resume_path);
        if (eval->parsed())
            return cmd_eval(eval_ckpt,
                            have_eval_t ? std::optional<double>(eval_t) : std::nullopt, eval_json);
        if (scan->parsed()) return cmd_scan(scan_ckpt, scan_temps, scan_csv_path);
        if (sweep->parsed()) return cmd_sweep(common, axis, values, parallelism);
        if (report->parsed()) return cmd_report(run_dirs, window, report_csv);
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const NonFiniteLoss& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNonFinite;
    } catch (const UnsupportedVersion& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckpoint;
    } catch (const CorruptCheckpoint& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckpoint;
    } catch (const SchemaMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const WindowTooShort& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
