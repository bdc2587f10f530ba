#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace moeeco {

// Seeded hierarchical Gaussian-mixture classification data. Class centers are
// drawn per-superclass then per-class, giving a controllable fine-grained
// confusability knob.
struct DatasetSpec {
    int n_classes = 8;
    int n_features = 16;
    int samples_per_class = 200;
    int n_superclasses = 4;
    double intra_spread = 1.0;  // within-class stddev
    double inter_spread = 1.0;  // class-center spread inside a superclass
    std::uint64_t seed = 1;

    void validate() const;  // throws InvalidSpec
};

struct LabeledBatch {
    int n = 0;
    int n_features = 0;
    std::vector<double> features;  // row-major [n x n_features]
    std::vector<int> labels;       // values in [0, n_classes)

    const double* row(int i) const { return features.data() + static_cast<std::size_t>(i) * n_features; }
};

struct Dataset {
    LabeledBatch train;
    LabeledBatch test;
    int n_classes = 0;
};

// Deterministic contiguous-block assignment; remainder classes go to the
// leading superclasses, one extra each.
int superclass_of(int cls, int n_classes, int n_superclasses);

// Two independently drawn splits; features z-scored with train statistics.
Dataset generate(const DatasetSpec& spec);

// CSV rows are `label,f1,...,fd` after one header line. Throws ParseError
// with the 1-based row number, or LabelOutOfRange.
LabeledBatch load_csv(const std::string& path, int n_classes);

}  // namespace moeeco
