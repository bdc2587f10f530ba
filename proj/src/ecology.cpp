#include "moeeco/ecology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "moeeco/data.hpp"
#include "moeeco/errors.hpp"
#include "moeeco/kernels.hpp"

namespace moeeco {

const char* to_string(ExpertCategory c) {
    switch (c) {
        case ExpertCategory::PureCore: return "PURE_CORE";
        case ExpertCategory::BroadCore: return "BROAD_CORE";
        case ExpertCategory::WeakCore: return "WEAK_CORE";
        case ExpertCategory::Edge: return "EDGE";
        case ExpertCategory::Noise: return "NOISE";
        case ExpertCategory::Dead: return "DEAD";
    }
    return "?";
}

ExpertCategory classify_expert(double usage, double accuracy) {
    if (usage < 0.01) return ExpertCategory::Dead;
    if (usage < 0.03) return accuracy >= 0.25 ? ExpertCategory::Edge : ExpertCategory::Noise;
    if (accuracy >= 0.50) return ExpertCategory::PureCore;
    if (accuracy >= 0.30) return ExpertCategory::BroadCore;
    return ExpertCategory::WeakCore;
}

EvalResult evaluate(const MoeModel& model, const LabeledBatch& test, double t_eval,
                    const EcologyOptions& opts) {
    if (test.n == 0) throw InvalidSpec("evaluate needs a non-empty test split");
    if (!(t_eval > 0.0)) throw InvalidSpec("evaluation temperature must be > 0");

    const int n_exp = model.n_experts();
    const int n_tiers = model.tiers.n_tiers();
    const int n = test.n;

    BatchWorkspace ws;
    Prng unused;
    batch_forward(model, test, t_eval, RoutingMode::Learned, unused, ws, /*parallel=*/true);

    std::vector<int> top1_count(n_exp, 0), correct_count(n_exp, 0);
    std::vector<int> tier_count(n_tiers, 0), tier_hard(n_tiers, 0), tier_easy(n_tiers, 0);
    std::vector<int> flow_count(static_cast<std::size_t>(n_tiers) * n_tiers, 0);
    int total_correct = 0;
    for (int i = 0; i < n; ++i) {
        const int ex = ws.first[i];
        const int tier = model.experts[ex].tier;
        const int tier2 = model.experts[ws.second[i]].tier;
        ++top1_count[ex];
        ++tier_count[tier];
        ++flow_count[static_cast<std::size_t>(tier) * n_tiers + tier2];
        const int pred = argmax_lowest_tie(ws.ens_prob.row(i), model.dims.n_classes);
        const bool correct = pred == test.labels[i];
        if (correct) {
            ++correct_count[ex];
            ++total_correct;
        }
        const double p = ws.confidence[i];
        if (p < opts.hard_threshold) ++tier_hard[tier];
        if (p > opts.easy_threshold) ++tier_easy[tier];
    }

    EvalResult out;
    out.top1 = static_cast<double>(total_correct) / n;
    EcologyReport& rep = out.report;
    rep.n_samples = n;
    rep.census.resize(n_exp);
    for (int e = 0; e < n_exp; ++e) {
        ExpertCensusRow& row = rep.census[e];
        row.id = e;
        row.tier = model.experts[e].tier;
        row.top1_count = top1_count[e];
        row.usage = static_cast<double>(top1_count[e]) / n;
        row.accuracy = top1_count[e] > 0
                           ? static_cast<double>(correct_count[e]) / top1_count[e]
                           : 0.0;
        row.category = classify_expert(row.usage, row.accuracy);
        if (row.category == ExpertCategory::Dead)
            ++rep.dead_count;
        else
            ++rep.active_count;
    }
    rep.tier_usage.resize(n_tiers);
    for (int t = 0; t < n_tiers; ++t)
        rep.tier_usage[t] = static_cast<double>(tier_count[t]) / n;
    rep.flow.n_tiers = n_tiers;
    rep.flow.pct.resize(flow_count.size());
    for (std::size_t k = 0; k < flow_count.size(); ++k)
        rep.flow.pct[k] = 100.0 * static_cast<double>(flow_count[k]) / n;
    rep.hard_ratio_per_tier.resize(n_tiers);
    rep.easy_ratio_per_tier.resize(n_tiers);
    for (int t = 0; t < n_tiers; ++t) {
        if (tier_count[t] == 0) continue;  // degenerate tier: ratios stay absent
        rep.hard_ratio_per_tier[t] = static_cast<double>(tier_hard[t]) / tier_count[t];
        rep.easy_ratio_per_tier[t] = static_cast<double>(tier_easy[t]) / tier_count[t];
    }
    const auto& hard0 = rep.hard_ratio_per_tier.front();
    const auto& hardL = rep.hard_ratio_per_tier.back();
    if (n_tiers > 1 && hard0 && hardL && *hardL > 0.0)
        rep.t0_t2_hard_ratio = *hard0 / *hardL;
    return out;
}

RevivalStats revival_stats(const std::vector<int>& dead_series, const std::vector<int>& epochs) {
    if (dead_series.empty()) throw InvalidSpec("revival_stats needs a non-empty trajectory");
    RevivalStats out;
    out.peak_dead = dead_series.front();
    out.peak_epoch = epochs.empty() ? 0 : epochs.front();
    for (std::size_t i = 0; i < dead_series.size(); ++i) {
        if (dead_series[i] > out.peak_dead) {
            out.peak_dead = dead_series[i];
            out.peak_epoch = i < epochs.size() ? epochs[i] : static_cast<int>(i);
        }
    }
    out.final_dead = dead_series.back();
    out.revived = out.peak_dead - out.final_dead;
    return out;
}

RevivalStats revival_stats(const RunTrajectory& traj) {
    std::vector<int> dead, epochs;
    for (const auto& r : traj.records) {
        dead.push_back(r.ecology.dead_count);
        epochs.push_back(r.epoch);
    }
    return revival_stats(dead, epochs);
}

std::vector<ScanRow> temperature_scan(const MoeModel& model, const LabeledBatch& test,
                                      const std::vector<double>& temps,
                                      const EcologyOptions& opts) {
    std::vector<ScanRow> out;
    out.reserve(temps.size());
    for (double t : temps) {
        if (!(t > 0.0)) throw InvalidSpec("scan temperatures must be > 0");
        const EvalResult r = evaluate(model, test, t, opts);
        ScanRow row;
        row.temperature = t;
        row.accuracy = r.top1;
        row.tier_usage = r.report.tier_usage;
        row.active_count = r.report.active_count;
        row.dead_count = r.report.dead_count;
        row.t0_t2_hard_ratio = r.report.t0_t2_hard_ratio;
        out.push_back(std::move(row));
    }
    return out;
}

const std::vector<double>& default_scan_temps() {
    static const std::vector<double> temps = {0.1, 0.3, 0.5, 0.7, 1.0, 2.0, 5.0};
    return temps;
}

StabilityStats stability_stats(const std::vector<StabilityInput>& window) {
    if (window.size() < 2) throw WindowTooShort("stability window needs at least 2 records");
    StabilityStats out;
    out.min = out.max = window.front().top1;
    for (const auto& w : window) {
        out.mean += w.top1;
        out.min = std::min(out.min, w.top1);
        out.max = std::max(out.max, w.top1);
    }
    out.mean /= static_cast<double>(window.size());
    out.range = out.max - out.min;
    double ss = 0.0;
    for (const auto& w : window) {
        const double d = w.top1 - out.mean;
        ss += d * d;
    }
    out.sigma = std::sqrt(ss / static_cast<double>(window.size()));

    const std::size_t n_tiers = window.front().tier_usage.size();
    out.tier_usage_range.assign(n_tiers, 0.0);
    for (std::size_t t = 0; t < n_tiers; ++t) {
        double lo = window.front().tier_usage[t], hi = lo;
        for (const auto& w : window) {
            lo = std::min(lo, w.tier_usage[t]);
            hi = std::max(hi, w.tier_usage[t]);
        }
        out.tier_usage_range[t] = hi - lo;
        out.max_tier_usage_range = std::max(out.max_tier_usage_range, hi - lo);
    }
    return out;
}

PhaseSummary phase_report(const std::vector<int>& dead_series, const std::vector<int>& epochs,
                          double e_final) {
    const RevivalStats rs = revival_stats(dead_series, epochs);
    PhaseSummary out;
    out.label = classify_phase(e_final);
    out.e_final = e_final;
    out.final_dead = rs.final_dead;
    out.peak_dead = rs.peak_dead;
    out.revived = rs.revived;
    out.task_complexity_flag = out.label == PhaseLabel::Healthy && rs.final_dead > 0;
    out.consistent = !out.task_complexity_flag;
    return out;
}

PhaseSummary phase_report(const RunTrajectory& traj, const HyperParams& hp) {
    if (traj.records.empty()) throw InvalidSpec("phase_report needs a non-empty trajectory");
    std::vector<int> dead, epochs;
    for (const auto& r : traj.records) {
        dead.push_back(r.ecology.dead_count);
        epochs.push_back(r.epoch);
    }
    // O + B == 0 means an unbounded exploration budget.
    const double e_final = hp.o + hp.b > 0.0
                               ? compute_E(hp, traj.records.back().temperature)
                               : std::numeric_limits<double>::infinity();
    return phase_report(dead, epochs, e_final);
}

}  // namespace moeeco
