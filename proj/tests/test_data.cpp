#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "moeeco/data.hpp"
#include "moeeco/errors.hpp"

using namespace moeeco;

namespace {

std::string write_temp_csv(const std::string& body) {
    static int counter = 0;
    const auto path = std::filesystem::temp_directory_path() /
                      ("moeeco_csv_" + std::to_string(::getpid()) + "_" +
                       std::to_string(counter++) + ".csv");
    std::ofstream out(path);
    out << body;
    return path.string();
}

}  // namespace

TEST_CASE("generation is deterministic for a fixed seed") {
    DatasetSpec spec;
    spec.n_classes = 2;
    spec.n_features = 2;
    spec.samples_per_class = 10;
    spec.n_superclasses = 1;
    spec.seed = 7;
    const Dataset a = generate(spec);
    const Dataset b = generate(spec);
    CHECK(a.train.features == b.train.features);
    CHECK(a.test.features == b.test.features);
    CHECK(a.train.labels == b.train.labels);

    spec.seed = 8;
    const Dataset c = generate(spec);
    CHECK(a.train.features != c.train.features);
}

TEST_CASE("zero intra spread collapses every class onto its center") {
    DatasetSpec spec;
    spec.n_classes = 3;
    spec.n_features = 4;
    spec.samples_per_class = 5;
    spec.n_superclasses = 3;
    spec.intra_spread = 0.0;
    spec.seed = 5;
    const Dataset ds = generate(spec);
    for (int c = 0; c < spec.n_classes; ++c) {
        const double* first = ds.train.row(c * spec.samples_per_class);
        for (int i = 1; i < spec.samples_per_class; ++i) {
            const double* x = ds.train.row(c * spec.samples_per_class + i);
            for (int j = 0; j < spec.n_features; ++j) CHECK(x[j] == first[j]);
        }
    }
}

TEST_CASE("class-to-superclass map uses contiguous blocks") {
    // 8 classes over 4 superclasses: {0,1}->0, {2,3}->1, {4,5}->2, {6,7}->3.
    for (int c = 0; c < 8; ++c) CHECK(superclass_of(c, 8, 4) == c / 2);
    // Remainder spreads over the leading superclasses.
    // 10 classes, 4 superclasses -> sizes 3,3,2,2.
    const int expect10[] = {0, 0, 0, 1, 1, 1, 2, 2, 3, 3};
    for (int c = 0; c < 10; ++c) CHECK(superclass_of(c, 10, 4) == expect10[c]);
    // Exhaustive sanity: every class maps into range and coverage is total.
    for (int n_cls = 1; n_cls <= 12; ++n_cls)
        for (int n_sup = 1; n_sup <= n_cls; ++n_sup) {
            std::vector<int> count(n_sup, 0);
            for (int c = 0; c < n_cls; ++c) {
                const int s = superclass_of(c, n_cls, n_sup);
                REQUIRE(s >= 0);
                REQUIRE(s < n_sup);
                ++count[s];
            }
            int lo = count[0], hi = count[0];
            for (int s : count) {
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
            CHECK(hi - lo <= 1);
        }
}

TEST_CASE("class balance holds in both splits") {
    DatasetSpec spec;
    spec.n_classes = 5;
    spec.n_features = 3;
    spec.samples_per_class = 17;
    spec.n_superclasses = 2;
    spec.seed = 9;
    const Dataset ds = generate(spec);
    for (const LabeledBatch* split : {&ds.train, &ds.test}) {
        std::vector<int> counts(spec.n_classes, 0);
        for (int label : split->labels) ++counts[label];
        for (int c : counts) CHECK(c == spec.samples_per_class);
    }
}

TEST_CASE("separable data is solved by a nearest-center classifier") {
    DatasetSpec spec;
    spec.n_classes = 6;
    spec.n_features = 8;
    spec.samples_per_class = 30;
    spec.n_superclasses = 3;
    spec.intra_spread = 1e-3;
    spec.inter_spread = 10.0;
    spec.seed = 21;
    const Dataset ds = generate(spec);

    // Train-split class means act as centers.
    std::vector<std::vector<double>> centers(spec.n_classes,
                                             std::vector<double>(spec.n_features, 0.0));
    std::vector<int> counts(spec.n_classes, 0);
    for (int i = 0; i < ds.train.n; ++i) {
        const int c = ds.train.labels[i];
        ++counts[c];
        for (int j = 0; j < spec.n_features; ++j) centers[c][j] += ds.train.row(i)[j];
    }
    for (int c = 0; c < spec.n_classes; ++c)
        for (double& v : centers[c]) v /= counts[c];

    int correct = 0;
    for (int i = 0; i < ds.test.n; ++i) {
        int best = 0;
        double best_d = 1e300;
        for (int c = 0; c < spec.n_classes; ++c) {
            double d = 0.0;
            for (int j = 0; j < spec.n_features; ++j) {
                const double diff = ds.test.row(i)[j] - centers[c][j];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        if (best == ds.test.labels[i]) ++correct;
    }
    CHECK(correct == ds.test.n);
}

TEST_CASE("train features are z-scored with train statistics") {
    DatasetSpec spec;
    spec.n_classes = 4;
    spec.n_features = 6;
    spec.samples_per_class = 50;
    spec.seed = 33;
    const Dataset ds = generate(spec);
    for (int j = 0; j < spec.n_features; ++j) {
        double mean = 0.0, var = 0.0;
        for (int i = 0; i < ds.train.n; ++i) mean += ds.train.row(i)[j];
        mean /= ds.train.n;
        for (int i = 0; i < ds.train.n; ++i) {
            const double d = ds.train.row(i)[j] - mean;
            var += d * d;
        }
        var /= ds.train.n;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(var - 1.0) < 1e-9);
    }
}

TEST_CASE("invalid specs are rejected") {
    DatasetSpec spec;
    spec.n_classes = 0;
    CHECK_THROWS_AS(generate(spec), InvalidSpec);
    DatasetSpec super;
    super.n_superclasses = 100;
    super.n_classes = 4;
    CHECK_THROWS_AS(generate(super), InvalidSpec);
}

TEST_CASE("csv loads well-formed rows") {
    const std::string path = write_temp_csv(
        "label,f1,f2\n"
        "0,1.5,2.5\n"
        "1,-1.0,0.25\n"
        "2,0.0,1e-3\n");
    const LabeledBatch b = load_csv(path, 3);
    CHECK(b.n == 3);
    CHECK(b.n_features == 2);
    CHECK(b.labels == std::vector<int>{0, 1, 2});
    CHECK(b.row(0)[0] == 1.5);
    CHECK(b.row(2)[1] == 1e-3);
    std::filesystem::remove(path);
}

TEST_CASE("csv label at n_classes is out of range") {
    const std::string path = write_temp_csv("label,f1\n0,1.0\n2,2.0\n");
    CHECK_THROWS_AS(load_csv(path, 2), LabelOutOfRange);
    std::filesystem::remove(path);
}

TEST_CASE("csv rejects non-finite features with the row number") {
    const std::string path = write_temp_csv("label,f1\n0,1.0\n1,NaN\n");
    try {
        load_csv(path, 2);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.row == 3);
    }
    std::filesystem::remove(path);
}

TEST_CASE("csv rejects ragged rows") {
    const std::string path = write_temp_csv("label,f1,f2\n0,1.0\n");
    CHECK_THROWS_AS(load_csv(path, 2), ParseError);
    std::filesystem::remove(path);
}
