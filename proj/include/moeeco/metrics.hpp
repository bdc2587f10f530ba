#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "moeeco/ecology.hpp"

namespace moeeco {

constexpr int kMetricsSchemaVersion = 1;

// One self-contained JSON line per eval epoch. Fractions are stored as
// fractions; percent rendering happens only in the terminal tables.
nlohmann::json metrics_record(const std::string& run_id, const TrajectoryRecord& rec);

class MetricsWriter {
   public:
    MetricsWriter(const std::string& path, bool append);
    void write(const nlohmann::json& record);

   private:
    std::ofstream out_;
};

// Parses a metrics.jsonl file; throws SchemaMismatch on a version mismatch
// and ParseError on malformed lines.
std::vector<nlohmann::json> read_metrics_file(const std::string& path);

nlohmann::json ecology_report_json(const EcologyReport& report, double top1);

}  // namespace moeeco
