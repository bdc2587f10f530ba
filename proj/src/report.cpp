#include "moeeco/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "moeeco/errors.hpp"
#include "moeeco/metrics.hpp"

namespace moeeco {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string pct(double fraction, int decimals = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f%%", decimals, 100.0 * fraction);
    return buf;
}

std::string csv_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string render_ecology_table(const EcologyReport& rep, double top1) {
    std::string out;
    out += "top-1 accuracy: " + pct(top1) + "   samples: " + std::to_string(rep.n_samples) + "\n";
    out += "dead: " + std::to_string(rep.dead_count) +
           "   active: " + std::to_string(rep.active_count) + "/" +
           std::to_string(static_cast<int>(rep.census.size())) + "\n";
    out += "  id tier   usage     acc  category\n";
    for (const ExpertCensusRow& r : rep.census) {
        char line[128];
        std::snprintf(line, sizeof(line), "%4d %4d %7s %7s  %s\n", r.id, r.tier,
                      pct(r.usage).c_str(), r.top1_count > 0 ? pct(r.accuracy).c_str() : "-",
                      to_string(r.category));
        out += line;
    }
    out += "tier usage:";
    for (std::size_t t = 0; t < rep.tier_usage.size(); ++t)
        out += " T" + std::to_string(t) + "=" + pct(rep.tier_usage[t]);
    out += "\nflow matrix (% of samples, top-1 tier x top-2 tier):\n";
    for (int i = 0; i < rep.flow.n_tiers; ++i) {
        out += "  T" + std::to_string(i) + ":";
        for (int j = 0; j < rep.flow.n_tiers; ++j) out += fmt(" %6.2f", rep.flow.at(i, j));
        out += "\n";
    }
    auto ratio_line = [&](const char* label, const std::vector<std::optional<double>>& v) {
        std::string s(label);
        for (std::size_t t = 0; t < v.size(); ++t)
            s += " T" + std::to_string(t) + "=" + (v[t] ? pct(*v[t]) : std::string("-"));
        return s + "\n";
    };
    out += ratio_line("hard ratio:", rep.hard_ratio_per_tier);
    out += ratio_line("easy ratio:", rep.easy_ratio_per_tier);
    out += "first/last tier hard ratio: " +
           (rep.t0_t2_hard_ratio ? fmt("%.2fx", *rep.t0_t2_hard_ratio) : std::string("-")) + "\n";
    return out;
}

std::string render_scan_table(const std::vector<ScanRow>& rows) {
    std::string out = "    T     acc  active  dead  t0/tL hard  tier usage\n";
    for (const ScanRow& r : rows) {
        char line[160];
        std::snprintf(line, sizeof(line), "%5.2f %7s %7d %5d %10s  ", r.temperature,
                      pct(r.accuracy).c_str(), r.active_count, r.dead_count,
                      r.t0_t2_hard_ratio ? fmt("%.2fx", *r.t0_t2_hard_ratio).c_str() : "-");
        out += line;
        for (std::size_t t = 0; t < r.tier_usage.size(); ++t) {
            if (t) out += "/";
            out += fmt("%.1f", 100.0 * r.tier_usage[t]);
        }
        out += "\n";
    }
    return out;
}

std::string scan_csv(const std::vector<ScanRow>& rows) {
    std::string out = "temperature,accuracy,active_count,dead_count,t0_t2_hard_ratio";
    const std::size_t n_tiers = rows.empty() ? 0 : rows.front().tier_usage.size();
    for (std::size_t t = 0; t < n_tiers; ++t) out += ",tier_usage_" + std::to_string(t);
    out += "\n";
    for (const ScanRow& r : rows) {
        out += csv_num(r.temperature) + "," + csv_num(r.accuracy) + "," +
               std::to_string(r.active_count) + "," + std::to_string(r.dead_count) + ",";
        out += r.t0_t2_hard_ratio ? csv_num(*r.t0_t2_hard_ratio) : std::string("");
        for (std::size_t t = 0; t < r.tier_usage.size(); ++t)
            out += "," + csv_num(r.tier_usage[t]);
        out += "\n";
    }
    return out;
}

RunData load_run(const std::string& run_dir) {
    RunData out;
    out.dir = run_dir;
    out.records = read_metrics_file(run_dir + "/metrics.jsonl");
    if (out.records.empty()) throw InvalidSpec("no metrics records in " + run_dir);
    out.run_id = out.records.front().value("run_id", std::string("?"));
    // Reconstruct the tier signature from the per-expert tier labels.
    std::map<int, int> tier_counts;
    for (const auto& e : out.records.front()["per_expert"]) tier_counts[e["tier"].get<int>()]++;
    for (const auto& [tier, count] : tier_counts) {
        if (tier) out.tier_label += ":";
        out.tier_label += std::to_string(count);
    }
    return out;
}

std::string render_revival_table(const RunData& run) {
    std::string out = "run " + run.run_id + "\nepoch  dead  active\n";
    std::vector<int> dead, epochs;
    int n_experts = 0;
    for (const auto& r : run.records) {
        dead.push_back(r["dead_count"].get<int>());
        epochs.push_back(r["epoch"].get<int>());
        n_experts = static_cast<int>(r["per_expert"].size());
        char line[96];
        std::snprintf(line, sizeof(line), "%5d %5d %4d/%d\n", epochs.back(), dead.back(),
                      r["active_count"].get<int>(), n_experts);
        out += line;
    }
    const RevivalStats rs = revival_stats(dead, epochs);
    out += "revival: peak " + std::to_string(rs.peak_dead) + " @ epoch " +
           std::to_string(rs.peak_epoch) + ", final " + std::to_string(rs.final_dead) +
           ", revived " + std::to_string(rs.revived) + "\n";
    return out;
}

std::string render_phase_summary(const RunData& run) {
    std::vector<int> dead, epochs;
    for (const auto& r : run.records) {
        dead.push_back(r["dead_count"].get<int>());
        epochs.push_back(r["epoch"].get<int>());
    }
    const auto& e_json = run.records.back()["E"];
    const double e_final =
        e_json.is_null() ? std::numeric_limits<double>::infinity() : e_json.get<double>();
    const PhaseSummary ps = phase_report(dead, epochs, e_final);
    std::string out = "phase: " + std::string(to_string(ps.label));
    out += e_json.is_null() ? " (E undefined, O+B=0)" : " (E=" + fmt("%.4g", ps.e_final) + ")";
    out += "  final dead=" + std::to_string(ps.final_dead) +
           " peak=" + std::to_string(ps.peak_dead) + " revived=" + std::to_string(ps.revived);
    out += ps.task_complexity_flag ? "  [TaskComplexityFlag: healthy E but dead experts remain]"
                                   : "  [consistent]";
    return out + "\n";
}

std::string render_stability(const RunData& run, int first_epoch, int last_epoch) {
    std::vector<StabilityInput> window;
    for (const auto& r : run.records) {
        const int e = r["epoch"].get<int>();
        if (e < first_epoch || e > last_epoch) continue;
        StabilityInput in;
        in.top1 = r["top1"].get<double>();
        in.tier_usage = r["tier_usage"].get<std::vector<double>>();
        window.push_back(std::move(in));
    }
    const StabilityStats st = stability_stats(window);  // throws WindowTooShort
    std::string out = "stability over epochs [" + std::to_string(first_epoch) + ", " +
                      std::to_string(last_epoch) + "] (" + std::to_string(window.size()) +
                      " records):\n";
    out += "  top1 mean " + pct(st.mean) + "  min " + pct(st.min) + "  max " + pct(st.max) +
           "  range " + pct(st.range) + "  sigma " + pct(st.sigma) + "\n";
    out += "  max tier-usage range " + pct(st.max_tier_usage_range) + "\n";
    return out;
}

std::string render_comparison(const std::vector<RunData>& runs) {
    std::map<std::string, std::vector<const RunData*>> groups;
    for (const RunData& r : runs) groups[r.tier_label].push_back(&r);
    std::string out = "configuration comparison (final records):\n";
    for (const auto& [label, members] : groups) {
        double sum = 0.0, sum2 = 0.0, dead_sum = 0.0;
        for (const RunData* r : members) {
            const double top1 = r->records.back()["top1"].get<double>();
            sum += top1;
            sum2 += top1 * top1;
            dead_sum += r->records.back()["dead_count"].get<int>();
        }
        const double n = static_cast<double>(members.size());
        const double mean = sum / n;
        const double sigma = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
        out += "  tiers " + label + " (" + std::to_string(members.size()) + " run" +
               (members.size() == 1 ? "" : "s") + "): top1 " + pct(mean) + " +/- " + pct(sigma) +
               ", mean dead " + fmt("%.2f", dead_sum / n) + "\n";
        for (const RunData* r : members)
            out += "    " + r->run_id + ": top1 " + pct(r->records.back()["top1"].get<double>()) +
                   ", dead " + std::to_string(r->records.back()["dead_count"].get<int>()) + "\n";
    }
    return out;
}

std::string records_csv(const RunData& run) {
    const std::size_t n_tiers = run.records.front()["tier_usage"].size();
    std::string out =
        "run_id,epoch,phase_tag,temperature,E,top1,task,entropy_raw,balance_raw,oracle_raw,"
        "ortho_raw,total,dead_count,active_count";
    for (std::size_t t = 0; t < n_tiers; ++t) out += ",tier_usage_" + std::to_string(t);
    out += "\n";
    for (const auto& r : run.records) {
        const auto& l = r["loss"];
        out += r["run_id"].get<std::string>() + "," + std::to_string(r["epoch"].get<int>()) + "," +
               r["phase_tag"].get<std::string>() + "," + csv_num(r["temperature"].get<double>()) +
               "," + (r["E"].is_null() ? std::string("") : csv_num(r["E"].get<double>())) + "," +
               csv_num(r["top1"].get<double>()) + "," + csv_num(l["task"].get<double>()) + "," +
               csv_num(l["entropy_raw"].get<double>()) + "," +
               csv_num(l["balance_raw"].get<double>()) + "," +
               csv_num(l["oracle_raw"].get<double>()) + "," +
               csv_num(l["ortho_raw"].get<double>()) + "," + csv_num(l["total"].get<double>()) +
               "," + std::to_string(r["dead_count"].get<int>()) + "," +
               std::to_string(r["active_count"].get<int>());
        for (const auto& u : r["tier_usage"]) out += "," + csv_num(u.get<double>());
        out += "\n";
    }
    return out;
}

}  // namespace moeeco
