#include "moeeco/metrics.hpp"

#include "moeeco/errors.hpp"

namespace moeeco {

using nlohmann::json;

namespace {

json loss_json(const LossBreakdown& l) {
    return json{{"task", l.task},
                {"entropy_raw", l.entropy_raw},
                {"balance_raw", l.balance_raw},
                {"oracle_raw", l.oracle_raw},
                {"ortho_raw", l.ortho_raw},
                {"entropy_term", l.entropy_term},
                {"balance_term", l.balance_term},
                {"oracle_term", l.oracle_term},
                {"ortho_term", l.ortho_term},
                {"total", l.total},
                {"balance_kl", l.balance_kl},
                {"balance_var", l.balance_var},
                {"ortho_degenerate", l.ortho_degenerate}};
}

}  // namespace

json metrics_record(const std::string& run_id, const TrajectoryRecord& rec) {
    json per_expert = json::array();
    for (const ExpertCensusRow& row : rec.ecology.census)
        per_expert.push_back(json{{"id", row.id},
                                  {"tier", row.tier},
                                  {"usage", row.usage},
                                  {"accuracy", row.accuracy},
                                  {"category", to_string(row.category)}});
    json rec_json{
        {"schema_version", kMetricsSchemaVersion},
        {"run_id", run_id},
        {"epoch", rec.epoch},
        {"phase_tag", rec.warmup ? "warmup" : "learned"},
        {"warmup", rec.warmup},
        {"temperature", rec.temperature},
        {"E", rec.e_value ? json(*rec.e_value) : json(nullptr)},
        {"top1", rec.top1},
        {"loss", loss_json(rec.loss)},
        {"dead_count", rec.ecology.dead_count},
        {"active_count", rec.ecology.active_count},
        {"tier_usage", rec.ecology.tier_usage},
        {"flow", rec.ecology.flow.pct},
        {"per_expert", per_expert},
    };
    return rec_json;
}

MetricsWriter::MetricsWriter(const std::string& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw InvalidSpec("cannot open metrics file for write: " + path);
}

void MetricsWriter::write(const json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
}

std::vector<json> read_metrics_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open metrics file: " + path);
    std::vector<json> out;
    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError("bad metrics json", row);
        if (!j.contains("schema_version") || j["schema_version"] != kMetricsSchemaVersion)
            throw SchemaMismatch("metrics schema_version mismatch at line " + std::to_string(row));
        out.push_back(std::move(j));
    }
    return out;
}

json ecology_report_json(const EcologyReport& report, double top1) {
    json census = json::array();
    for (const ExpertCensusRow& row : report.census)
        census.push_back(json{{"id", row.id},
                              {"tier", row.tier},
                              {"top1_count", row.top1_count},
                              {"usage", row.usage},
                              {"accuracy", row.accuracy},
                              {"category", to_string(row.category)}});
    auto opt_list = [](const std::vector<std::optional<double>>& v) {
        json out = json::array();
        for (const auto& x : v) out.push_back(x ? json(*x) : json(nullptr));
        return out;
    };
    return json{
        {"top1", top1},
        {"n_samples", report.n_samples},
        {"dead_count", report.dead_count},
        {"active_count", report.active_count},
        {"tier_usage", report.tier_usage},
        {"flow", report.flow.pct},
        {"n_tiers", report.flow.n_tiers},
        {"hard_ratio_per_tier", opt_list(report.hard_ratio_per_tier)},
        {"easy_ratio_per_tier", opt_list(report.easy_ratio_per_tier)},
        {"t0_t2_hard_ratio",
         report.t0_t2_hard_ratio ? json(*report.t0_t2_hard_ratio) : json(nullptr)},
        {"census", census},
    };
}

}  // namespace moeeco
