#pragma once

#include <optional>
#include <string>
#include <vector>

#include "moeeco/config.hpp"

namespace moeeco {

// Exit codes shared by the CLI and tests.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNonFinite = 3;
constexpr int kExitCheckpoint = 4;
constexpr int kExitSchema = 5;

struct CommonOpts {
    std::string config_path;             // empty: defaults only
    std::vector<std::string> overrides;  // key=value pairs
    std::optional<std::uint64_t> seed;   // shorthand for train.seed
    std::optional<std::string> out_dir;  // overrides MOE_ECOLOGY_OUT and config
};

// Build the effective config: defaults, file, --set overrides, --seed/--out.
ExperimentConfig resolve_config(const CommonOpts& opts);

// Output root precedence: --out, then MOE_ECOLOGY_OUT, then config.
std::string effective_output_root(const ExperimentConfig& cfg,
                                  const std::optional<std::string>& out_flag);

int cmd_train(const CommonOpts& opts, const std::string& resume_checkpoint);
int cmd_eval(const std::string& checkpoint_path, std::optional<double> t_eval,
             const std::string& json_out);
int cmd_scan(const std::string& checkpoint_path, std::vector<double> temps,
             const std::string& csv_out);
int cmd_sweep(const CommonOpts& opts, const std::string& axis_key,
              const std::vector<std::string>& values, int parallelism);
int cmd_report(const std::vector<std::string>& run_dirs, const std::string& window,
               const std::string& csv_out);

}  // namespace moeeco
