#pragma once

#include <stdexcept>
#include <string>

namespace moeeco {

// Named failure modes as distinct exception types so tests and the CLI can
// map them to behavior without string matching.

struct ZeroDenominator : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveComplexity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidSpec : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    long row;
    ParseError(const std::string& msg, long row_)
        : std::runtime_error("row " + std::to_string(row_) + ": " + msg), row(row_) {}
};

struct LabelOutOfRange : std::runtime_error {
    long value;
    LabelOutOfRange(long value_, long row_)
        : std::runtime_error("label " + std::to_string(value_) + " out of range at row " +
                             std::to_string(row_)),
          value(value_) {}
};

struct InvalidConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Experiment-level config problems (unknown key, bad value). Exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteLoss : std::runtime_error {
    int epoch;
    int batch_index;
    NonFiniteLoss(int epoch_, int batch_index_)
        : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch_) +
                             ", batch " + std::to_string(batch_index_)),
          epoch(epoch_),
          batch_index(batch_index_) {}
};

struct CorruptCheckpoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedVersion : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WindowTooShort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace moeeco
