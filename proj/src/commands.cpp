#include "moeeco/commands.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "moeeco/checkpoint.hpp"
#include "moeeco/errors.hpp"
#include "moeeco/losses.hpp"
#include "moeeco/metrics.hpp"
#include "moeeco/report.hpp"
#include "moeeco/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace moeeco {

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg.apply_file(opts.config_path);
    for (const std::string& kv : opts.overrides) cfg.apply_override(kv);
    if (opts.seed) cfg.set("train.seed", std::to_string(*opts.seed));
    if (opts.out_dir) cfg.set("experiment.output_dir", *opts.out_dir);
    cfg.validate();
    return cfg;
}

std::string effective_output_root(const ExperimentConfig& cfg,
                                  const std::optional<std::string>& out_flag) {
    if (out_flag) return *out_flag;
    if (const char* env = std::getenv("MOE_ECOLOGY_OUT"); env && *env) return env;
    return cfg.output_dir();
}

namespace {

Dataset build_dataset(const ExperimentConfig& cfg) {
    if (cfg.data_source() == "csv") {
        Dataset ds;
        ds.n_classes = cfg.dims().n_classes;
        ds.train = load_csv(cfg.csv_path(), ds.n_classes);
        ds.test = load_csv(cfg.csv_test_path(), ds.n_classes);
        if (ds.train.n_features != cfg.dims().n_features)
            throw ConfigError("csv feature count does not match data.n_features");
        return ds;
    }
    return generate(cfg.dataset_spec());
}

struct RunOutcome {
    std::string run_dir;
    RunTrajectory traj;
};

// Full pipeline of one run: dataset, model, training, metrics, checkpoints,
// final reports. `resume` continues from a loaded checkpoint state.
RunOutcome execute_run(const ExperimentConfig& cfg, const std::string& output_root,
                       const CheckpointState* resume_state, bool quiet) {
    const std::string run_id = cfg.run_id();
    const fs::path run_dir = fs::path(output_root) / run_id;
    fs::create_directories(run_dir);

    const Dataset data = build_dataset(cfg);
    const HyperParams hp = cfg.hyper_params();
    const TrainConfig tc = cfg.train_config();
    const LossOptions lo = cfg.loss_options();
    const EcologyOptions eco = cfg.ecology_options();

    MoeModel model = init_model(cfg.tier_config(), cfg.dims(), tc.seed);
    AdamW opt;
    ResumePoint resume_point;
    const ResumePoint* resume_ptr = nullptr;
    if (resume_state) {
        restore(*resume_state, model, opt);
        resume_point.epoch_completed = static_cast<int>(resume_state->epoch_completed);
        resume_point.global_step = resume_state->global_step;
        resume_ptr = &resume_point;
    }

    // run.json records identity, config, and the frozen teacher map.
    {
        json manifest{{"run_id", run_id},
                      {"config", cfg.canonical_text()},
                      {"oracle_assignment", lo.oracle_assignment}};
        std::ofstream mf(run_dir / "run.json", std::ios::trunc);
        mf << manifest.dump(2) << '\n';
    }

    MetricsWriter writer((run_dir / "metrics.jsonl").string(), /*append=*/resume_state != nullptr);
    std::uint64_t last_step = resume_state ? resume_state->global_step : 0;

    TrainSinks sinks;
    sinks.on_eval = [&](const TrajectoryRecord& rec) { writer.write(metrics_record(run_id, rec)); };
    sinks.on_checkpoint = [&](int epoch_completed, std::uint64_t global_step) {
        last_step = global_step;
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_e%04d.bin", epoch_completed);
        write_checkpoint_file((run_dir / name).string(),
                              snapshot(model, opt, cfg.canonical_text(),
                                       static_cast<std::uint64_t>(epoch_completed), global_step,
                                       tc.seed));
    };

    RunOutcome out;
    out.run_dir = run_dir.string();
    out.traj = train(model, data, hp, tc, lo, opt, sinks, resume_ptr, eco);

    // Final checkpoint and ecology report.
    const int steps_per_epoch = (data.train.n + tc.batch_size - 1) / tc.batch_size;
    const std::uint64_t final_step =
        static_cast<std::uint64_t>(tc.epochs) * static_cast<std::uint64_t>(steps_per_epoch);
    (void)last_step;
    if (tc.epochs > 0) {
        write_checkpoint_file((run_dir / "checkpoint_final.bin").string(),
                              snapshot(model, opt, cfg.canonical_text(),
                                       static_cast<std::uint64_t>(tc.epochs - 1), final_step,
                                       tc.seed));
        const TrajectoryRecord& last = out.traj.records.back();
        std::ofstream rf(run_dir / "ecology_report.json", std::ios::trunc);
        rf << ecology_report_json(last.ecology, last.top1).dump(2) << '\n';
        if (!quiet) {
            std::cout << "run " << run_id << " finished: epoch " << last.epoch << ", top1 "
                      << last.top1 << ", dead " << last.ecology.dead_count << "\n";
            std::cout << render_phase_summary(load_run(out.run_dir));
        }
    } else if (!quiet) {
        std::cout << "run " << run_id << ": 0 epochs requested, nothing trained\n";
    }
    return out;
}

std::vector<double> parse_temp_list(const std::vector<double>& temps) {
    return temps.empty() ? default_scan_temps() : temps;
}

}  // namespace

int cmd_train(const CommonOpts& opts, const std::string& resume_checkpoint) {
    if (!resume_checkpoint.empty()) {
        if (!opts.config_path.empty() || !opts.overrides.empty())
            throw ConfigError("--resume uses the checkpoint's embedded config; drop --config/--set");
        const CheckpointState state = read_checkpoint_file(resume_checkpoint);
        ExperimentConfig cfg = config_from_text(state.config_text);
        cfg.validate();
        execute_run(cfg, effective_output_root(cfg, opts.out_dir), &state, false);
        return kExitOk;
    }
    const ExperimentConfig cfg = resolve_config(opts);
    execute_run(cfg, effective_output_root(cfg, opts.out_dir), nullptr, false);
    return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, std::optional<double> t_eval,
             const std::string& json_out) {
    const CheckpointState state = read_checkpoint_file(checkpoint_path);
    ExperimentConfig cfg = config_from_text(state.config_text);
    cfg.validate();
    MoeModel model = init_model(cfg.tier_config(), cfg.dims(), state.seed);
    AdamW opt;
    restore(state, model, opt);
    const Dataset data = build_dataset(cfg);
    const HyperParams hp = cfg.hyper_params();
    const double temp =
        t_eval ? *t_eval : temperature_at(hp, static_cast<int>(state.epoch_completed));
    const EvalResult ev = evaluate(model, data.test, temp, cfg.ecology_options());
    std::cout << "checkpoint " << checkpoint_path << " @ epoch " << state.epoch_completed
              << ", eval T=" << temp << "\n"
              << render_ecology_table(ev.report, ev.top1);
    if (!json_out.empty()) {
        std::ofstream out(json_out, std::ios::trunc);
        out << ecology_report_json(ev.report, ev.top1).dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_scan(const std::string& checkpoint_path, std::vector<double> temps,
             const std::string& csv_out) {
    const CheckpointState state = read_checkpoint_file(checkpoint_path);
    ExperimentConfig cfg = config_from_text(state.config_text);
    cfg.validate();
    MoeModel model = init_model(cfg.tier_config(), cfg.dims(), state.seed);
    AdamW opt;
    restore(state, model, opt);
    const Dataset data = build_dataset(cfg);
    const std::vector<ScanRow> rows =
        temperature_scan(model, data.test, parse_temp_list(temps), cfg.ecology_options());
    std::cout << render_scan_table(rows);
    const std::string csv_path =
        csv_out.empty() ? (fs::path(checkpoint_path).parent_path() / "scan.csv").string()
                        : csv_out;
    std::ofstream out(csv_path, std::ios::trunc);
    out << scan_csv(rows);
    std::cout << "scan csv written to " << csv_path << "\n";
    return kExitOk;
}

int cmd_sweep(const CommonOpts& opts, const std::string& axis_key,
              const std::vector<std::string>& values, int parallelism) {
    if (values.empty()) throw ConfigError("sweep needs a non-empty value list");
    if (parallelism < 1) throw ConfigError("sweep parallelism must be >= 1");
    const ExperimentConfig base = resolve_config(opts);
    base.raw(axis_key);  // throws on unknown axis key
    const std::string root = effective_output_root(base, opts.out_dir);

    struct SweepRow {
        std::string value;
        std::string run_id;
        std::string error;
        int final_dead = -1;
        double final_top1 = 0.0;
        std::string e_final;
    };
    std::vector<SweepRow> rows(values.size());
    std::vector<ExperimentConfig> cfgs;
    for (const std::string& v : values) {
        ExperimentConfig cfg = base;
        cfg.set(axis_key, v);
        std::string tag = axis_key.substr(axis_key.rfind('.') + 1) + "_" + v;
        for (char& c : tag)
            if (c == ',' || c == '/' || c == ' ') c = '_';
        cfg.set("experiment.name", base.name() + "-" + tag);
        cfg.validate();
        cfgs.push_back(std::move(cfg));
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cfgs.size()) return;
            SweepRow& row = rows[i];
            row.value = values[i];
            row.run_id = cfgs[i].run_id();
            try {
                const RunOutcome rr = execute_run(cfgs[i], root, nullptr, /*quiet=*/true);
                const TrajectoryRecord& last = rr.traj.records.back();
                row.final_dead = last.ecology.dead_count;
                row.final_top1 = last.top1;
                if (last.e_value) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "%.17g", *last.e_value);
                    row.e_final = buf;
                }
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min<std::size_t>(parallelism, cfgs.size());
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    const std::string summary_path =
        (fs::path(root) / ("sweep-" + axis_key + "-" + base.hash_hex() + "-summary.csv")).string();
    {
        std::ofstream out(summary_path, std::ios::trunc);
        out << "value,run_id,status,final_top1,final_dead,E_final\n";
        for (const SweepRow& r : rows) {
            char top1[32];
            std::snprintf(top1, sizeof(top1), "%.17g", r.final_top1);
            out << r.value << "," << r.run_id << "," << (r.error.empty() ? "ok" : "error") << ","
                << (r.error.empty() ? top1 : "") << ","
                << (r.error.empty() ? std::to_string(r.final_dead) : "") << "," << r.e_final
                << "\n";
        }
    }
    int failures = 0;
    for (const SweepRow& r : rows) {
        std::cout << axis_key << "=" << r.value << " -> " << r.run_id << ": ";
        if (r.error.empty()) {
            std::cout << "top1 " << r.final_top1 << ", dead " << r.final_dead << "\n";
        } else {
            std::cout << "FAILED: " << r.error << "\n";
            ++failures;
        }
    }
    std::cout << "sweep finished, " << failures << " failure(s); summary: " << summary_path
              << "\n";
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& window,
               const std::string& csv_out) {
    if (run_dirs.empty()) throw ConfigError("report needs at least one run directory");
    std::vector<RunData> runs;
    for (const std::string& dir : run_dirs) runs.push_back(load_run(dir));

    for (const RunData& run : runs) {
        std::cout << render_revival_table(run);
        std::cout << render_phase_summary(run);
        if (!window.empty()) {
            int a = 0, b = 0;
            const std::size_t colon = window.find(':');
            if (colon == std::string::npos)
                throw ConfigError("--window expects first:last, got '" + window + "'");
            const std::string sa = window.substr(0, colon), sb = window.substr(colon + 1);
            auto ra = std::from_chars(sa.data(), sa.data() + sa.size(), a);
            auto rb = std::from_chars(sb.data(), sb.data() + sb.size(), b);
            if (ra.ec != std::errc{} || rb.ec != std::errc{})
                throw ConfigError("--window expects integer epochs");
            std::cout << render_stability(run, a, b);
        }
        std::cout << "\n";
    }
    if (runs.size() > 1) std::cout << render_comparison(runs);
    if (!csv_out.empty()) {
        std::ofstream out(csv_out, std::ios::trunc);
        for (const RunData& run : runs) out << records_csv(run);
        std::cout << "records csv written to " << csv_out << "\n";
    }
    return kExitOk;
}

}  // namespace moeeco
