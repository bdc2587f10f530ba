#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "moeeco/data.hpp"
#include "moeeco/ecology.hpp"
#include "moeeco/hyperparams.hpp"
#include "moeeco/model.hpp"
#include "moeeco/trainer.hpp"

namespace moeeco {

// Flat dotted-key experiment configuration. Files are `key = value` lines
// with '#' comments; unknown keys are rejected. Every key has a documented
// default, printable via --print-config.
class ExperimentConfig {
   public:
    ExperimentConfig();  // defaults

    void apply_file(const std::string& path);
    void apply_override(const std::string& key_equals_value);  // "key=value"
    void set(const std::string& key, const std::string& value);
    const std::string& raw(const std::string& key) const;

    // Cross-field validation; throws ConfigError naming the offending key.
    void validate() const;

    // Typed views over the validated config.
    DatasetSpec dataset_spec() const;
    HyperParams hyper_params() const;
    TrainConfig train_config() const;
    TierConfig tier_config() const;
    Dims dims() const;
    LossOptions loss_options() const;
    EcologyOptions ecology_options() const;
    std::string name() const;
    std::string output_dir() const;
    std::string data_source() const;
    std::string csv_path() const;
    std::string csv_test_path() const;

    // Sorted "key = value" lines; the identity hash skips
    // experiment.output_dir so relocating outputs keeps the run id.
    std::string canonical_text() const;
    std::string hash_hex() const;
    std::string run_id() const;

    static const std::vector<std::string>& known_keys();

   private:
    std::map<std::string, std::string> kv_;
};

ExperimentConfig config_from_text(const std::string& canonical_text);

}  // namespace moeeco
