#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "moeeco/ecology.hpp"

namespace moeeco {

// Terminal renderers and CSV exporters over parsed metrics records.

std::string render_ecology_table(const EcologyReport& report, double top1);

std::string render_scan_table(const std::vector<ScanRow>& rows);
std::string scan_csv(const std::vector<ScanRow>& rows);

struct RunData {
    std::string dir;
    std::string run_id;
    std::vector<nlohmann::json> records;
    std::string tier_label;  // reconstructed from per-expert tiers, "8:4:4"
};

RunData load_run(const std::string& run_dir);

std::string render_revival_table(const RunData& run);
std::string render_phase_summary(const RunData& run);
// window: inclusive [first, last] epoch range.
std::string render_stability(const RunData& run, int first_epoch, int last_epoch);
std::string render_comparison(const std::vector<RunData>& runs);

std::string records_csv(const RunData& run);

}  // namespace moeeco
