#include "moeeco/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "moeeco/errors.hpp"
#include "moeeco/prng.hpp"

namespace moeeco {

void DatasetSpec::validate() const {
    if (n_classes <= 0 || n_features <= 0 || samples_per_class <= 0)
        throw InvalidSpec("dataset dimensions must be positive");
    if (n_superclasses <= 0 || n_superclasses > n_classes)
        throw InvalidSpec("n_superclasses must be in [1, n_classes]");
    if (intra_spread < 0.0 || inter_spread < 0.0)
        throw InvalidSpec("spreads must be >= 0");
}

int superclass_of(int cls, int n_classes, int n_superclasses) {
    const int base = n_classes / n_superclasses;
    const int rem = n_classes % n_superclasses;
    // First `rem` superclasses hold base+1 classes, the rest hold base.
    const int cutoff = rem * (base + 1);
    if (cls < cutoff) return cls / (base + 1);
    return rem + (cls - cutoff) / base;
}

namespace {

// Child stream ids under Stream::Data.
constexpr std::uint64_t kCenters = 0;
constexpr std::uint64_t kTrain = 1;
constexpr std::uint64_t kTest = 2;

LabeledBatch draw_split(const DatasetSpec& spec, const std::vector<double>& centers, Prng rng) {
    LabeledBatch out;
    out.n = spec.n_classes * spec.samples_per_class;
    out.n_features = spec.n_features;
    out.features.resize(static_cast<std::size_t>(out.n) * spec.n_features);
    out.labels.resize(out.n);
    std::size_t at = 0;
    int idx = 0;
    for (int c = 0; c < spec.n_classes; ++c) {
        const double* center = centers.data() + static_cast<std::size_t>(c) * spec.n_features;
        for (int i = 0; i < spec.samples_per_class; ++i, ++idx) {
            out.labels[idx] = c;
            for (int j = 0; j < spec.n_features; ++j)
                out.features[at++] = center[j] + spec.intra_spread * rng.next_gaussian();
        }
    }
    return out;
}

}  // namespace

Dataset generate(const DatasetSpec& spec) {
    spec.validate();
    const Prng root(spec.seed, Stream::Data);

    // Superclass centers at scale 4*inter_spread, class centers around them.
    Prng centers_rng = root.split(kCenters);
    std::vector<double> super(static_cast<std::size_t>(spec.n_superclasses) * spec.n_features);
    for (double& v : super) v = 4.0 * spec.inter_spread * centers_rng.next_gaussian();
    std::vector<double> centers(static_cast<std::size_t>(spec.n_classes) * spec.n_features);
    for (int c = 0; c < spec.n_classes; ++c) {
        const int sc = superclass_of(c, spec.n_classes, spec.n_superclasses);
        for (int j = 0; j < spec.n_features; ++j)
            centers[static_cast<std::size_t>(c) * spec.n_features + j] =
                super[static_cast<std::size_t>(sc) * spec.n_features + j] +
                spec.inter_spread * centers_rng.next_gaussian();
    }

    Dataset ds;
    ds.n_classes = spec.n_classes;
    ds.train = draw_split(spec, centers, root.split(kTrain));
    ds.test = draw_split(spec, centers, root.split(kTest));

    // z-score both splits with train statistics; zero-variance dims pass
    // through unscaled.
    const int d = spec.n_features;
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (int i = 0; i < ds.train.n; ++i) {
        const double* x = ds.train.row(i);
        for (int j = 0; j < d; ++j) mean[j] += x[j];
    }
    for (int j = 0; j < d; ++j) mean[j] /= ds.train.n;
    for (int i = 0; i < ds.train.n; ++i) {
        const double* x = ds.train.row(i);
        for (int j = 0; j < d; ++j) {
            const double dlt = x[j] - mean[j];
            var[j] += dlt * dlt;
        }
    }
    std::vector<double> inv_std(d);
    for (int j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[j] / ds.train.n);
        inv_std[j] = sd > 0.0 ? 1.0 / sd : 1.0;
    }
    for (LabeledBatch* split : {&ds.train, &ds.test})
        for (int i = 0; i < split->n; ++i) {
            double* x = split->features.data() + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) x[j] = (x[j] - mean[j]) * inv_std[j];
        }
    return ds;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string trimmed(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

LabeledBatch load_csv(const std::string& path, int n_classes) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open csv file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header line", 1);
    const std::size_t n_cols = split_commas(line).size();
    if (n_cols < 2) throw ParseError("header needs a label and at least one feature column", 1);

    LabeledBatch out;
    out.n_features = static_cast<int>(n_cols) - 1;

    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trimmed(line).empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != n_cols)
            throw ParseError("expected " + std::to_string(n_cols) + " columns, got " +
                                 std::to_string(cells.size()),
                             row);
        const std::string label_cell = trimmed(cells[0]);
        long label = 0;
        auto rc = std::from_chars(label_cell.data(), label_cell.data() + label_cell.size(), label);
        if (rc.ec != std::errc{} || rc.ptr != label_cell.data() + label_cell.size())
            throw ParseError("bad label '" + label_cell + "'", row);
        if (label < 0 || label >= n_classes) throw LabelOutOfRange(label, row);
        out.labels.push_back(static_cast<int>(label));
        for (std::size_t c = 1; c < n_cols; ++c) {
            const std::string cell = trimmed(cells[c]);
            double v = 0.0;
            auto fc = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (fc.ec != std::errc{} || fc.ptr != cell.data() + cell.size())
                throw ParseError("bad feature '" + cell + "'", row);
            if (!std::isfinite(v)) throw ParseError("non-finite feature '" + cell + "'", row);
            out.features.push_back(v);
        }
        ++out.n;
    }
    return out;
}

}  // namespace moeeco
