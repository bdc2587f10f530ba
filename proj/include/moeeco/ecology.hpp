#pragma once

#include <optional>
#include <string>
#include <vector>

#include "moeeco/hyperparams.hpp"
#include "moeeco/losses.hpp"
#include "moeeco/model.hpp"

namespace moeeco {

struct LabeledBatch;

// Six-way expert taxonomy over top-1 usage U and served accuracy A. All
// lower bounds are inclusive.
enum class ExpertCategory { PureCore, BroadCore, WeakCore, Edge, Noise, Dead };

const char* to_string(ExpertCategory c);

ExpertCategory classify_expert(double usage, double accuracy);

struct ExpertCensusRow {
    int id = 0;
    int tier = 0;
    int top1_count = 0;
    double usage = 0.0;     // top-1 share of evaluation samples
    double accuracy = 0.0;  // correct / served, 0 when never top-1
    ExpertCategory category = ExpertCategory::Dead;
};

// Joint (top-1 tier, top-2 tier) distribution in percent of all samples.
struct TierFlowMatrix {
    int n_tiers = 0;
    std::vector<double> pct;  // row-major [n_tiers x n_tiers]

    double at(int i, int j) const { return pct[static_cast<std::size_t>(i) * n_tiers + j]; }
};

struct EcologyReport {
    std::vector<ExpertCensusRow> census;
    int dead_count = 0;
    int active_count = 0;  // usage >= 1%
    std::vector<double> tier_usage;  // top-1 share per tier, fractions
    TierFlowMatrix flow;
    // Absent when a tier received no top-1 samples (degenerate tier).
    std::vector<std::optional<double>> hard_ratio_per_tier;
    std::vector<std::optional<double>> easy_ratio_per_tier;
    std::optional<double> t0_t2_hard_ratio;  // first tier / last tier
    int n_samples = 0;
};

struct EvalResult {
    EcologyReport report;
    double top1 = 0.0;
    LossBreakdown loss;  // filled by the trainer's eval hook, not evaluate()
};

struct EcologyOptions {
    double hard_threshold = 0.4;  // confidence p < hard  => hard sample
    double easy_threshold = 0.7;  // confidence p > easy  => easy sample
};

// One Learned-mode forward pass over the test split at T_eval.
EvalResult evaluate(const MoeModel& model, const LabeledBatch& test, double t_eval,
                    const EcologyOptions& opts = {});

// Per-eval-epoch record; the substrate for revival / stability analysis.
// e_value is absent when O + B == 0 (E undefined).
struct TrajectoryRecord {
    int epoch = 0;
    bool warmup = false;
    double temperature = 0.0;
    std::optional<double> e_value;
    double top1 = 0.0;
    LossBreakdown loss;  // epoch-mean training losses
    EcologyReport ecology;
};

struct RunTrajectory {
    std::vector<TrajectoryRecord> records;
};

struct RevivalStats {
    int peak_dead = 0;
    int final_dead = 0;
    int revived = 0;
    int peak_epoch = 0;
};

RevivalStats revival_stats(const std::vector<int>& dead_series, const std::vector<int>& epochs);
RevivalStats revival_stats(const RunTrajectory& traj);

struct ScanRow {
    double temperature = 0.0;
    double accuracy = 0.0;
    std::vector<double> tier_usage;
    int active_count = 0;
    int dead_count = 0;
    std::optional<double> t0_t2_hard_ratio;
};

// Frozen-weights evaluation at each temperature.
std::vector<ScanRow> temperature_scan(const MoeModel& model, const LabeledBatch& test,
                                      const std::vector<double>& temps,
                                      const EcologyOptions& opts = {});

const std::vector<double>& default_scan_temps();  // {0.1,0.3,0.5,0.7,1.0,2.0,5.0}

struct StabilityStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double range = 0.0;
    double sigma = 0.0;  // population sigma
    std::vector<double> tier_usage_range;
    double max_tier_usage_range = 0.0;
};

struct StabilityInput {
    double top1 = 0.0;
    std::vector<double> tier_usage;
};

// Window of >= 2 consecutive eval records; throws WindowTooShort otherwise.
StabilityStats stability_stats(const std::vector<StabilityInput>& window);

struct PhaseSummary {
    PhaseLabel label = PhaseLabel::Healthy;
    double e_final = 0.0;
    int final_dead = 0;
    int peak_dead = 0;
    int revived = 0;
    bool task_complexity_flag = false;  // Healthy-by-E but dead experts remain
    bool consistent = true;
};

PhaseSummary phase_report(const RunTrajectory& traj, const HyperParams& hp);
PhaseSummary phase_report(const std::vector<int>& dead_series, const std::vector<int>& epochs,
                          double e_final);

}  // namespace moeeco
