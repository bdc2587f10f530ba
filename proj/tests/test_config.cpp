#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "moeeco/config.hpp"
#include "moeeco/errors.hpp"

using namespace moeeco;

namespace {

std::string write_temp(const std::string& body) {
    static int counter = 0;
    const auto path = std::filesystem::temp_directory_path() /
                      ("moeeco_cfg_" + std::to_string(::getpid()) + "_" +
                       std::to_string(counter++) + ".cfg");
    std::ofstream out(path);
    out << body;
    return path.string();
}

}  // namespace

TEST_CASE("defaults are valid and cover the documented keys") {
    ExperimentConfig cfg;
    cfg.validate();
    CHECK(cfg.raw("routing.t_init") == "3.0");
    CHECK(cfg.raw("loss.h") == "0.1");
    CHECK(cfg.raw("train.batch_size") == "64");
    CHECK(cfg.hyper_params().warmup_epochs == 15);
    CHECK(cfg.train_config().lr_encoder == 1e-4);
    CHECK(cfg.tier_config().label() == "8:4:4");
    CHECK(cfg.dims().n_classes == 8);  // inherited from data.n_classes
    CHECK(cfg.ecology_options().hard_threshold == 0.4);
}

TEST_CASE("file parsing with comments and overrides") {
    const std::string path = write_temp(
        "# experiment\n"
        "experiment.name = phase_a\n"
        "loss.b = 0.85   # raises the denominator\n"
        "model.tier_sizes = 4,4,4,4\n"
        "\n"
        "train.epochs = 12\n");
    ExperimentConfig cfg;
    cfg.apply_file(path);
    cfg.apply_override("loss.h=0.2");
    cfg.validate();
    CHECK(cfg.name() == "phase_a");
    CHECK(cfg.hyper_params().b == 0.85);
    CHECK(cfg.hyper_params().h == 0.2);
    CHECK(cfg.tier_config().tier_sizes == std::vector<int>{4, 4, 4, 4});
    CHECK(cfg.train_config().epochs == 12);
    std::filesystem::remove(path);
}

TEST_CASE("unknown keys are rejected with the key named") {
    ExperimentConfig cfg;
    try {
        cfg.set("train.lr", "0.1");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train.lr") != std::string::npos);
    }
    const std::string path = write_temp("data.nclasses = 7\n");
    ExperimentConfig cfg2;
    CHECK_THROWS_AS(cfg2.apply_file(path), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("value validation catches bad entries") {
    ExperimentConfig cfg;
    cfg.set("train.epochs", "banana");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    ExperimentConfig neg;
    neg.set("loss.h", "-1");
    CHECK_THROWS_AS(neg.validate(), InvalidConfig);

    ExperimentConfig src;
    src.set("data.source", "http");
    CHECK_THROWS_AS(src.validate(), ConfigError);

    ExperimentConfig mismatch;
    mismatch.set("model.n_classes", "5");  // data.n_classes defaults to 8
    CHECK_THROWS_AS(mismatch.validate(), ConfigError);

    ExperimentConfig csv;
    csv.set("data.source", "csv");
    CHECK_THROWS_AS(csv.validate(), ConfigError);  // csv_path missing
}

TEST_CASE("canonical text parses back to an identical config") {
    ExperimentConfig cfg;
    cfg.set("experiment.name", "roundtrip");
    cfg.set("loss.ortho", "0.05");
    const std::string text = cfg.canonical_text();
    const ExperimentConfig back = config_from_text(text);
    CHECK(back.canonical_text() == text);
    CHECK(back.run_id() == cfg.run_id());
}

TEST_CASE("run id depends on config and seed but not output dir") {
    ExperimentConfig a;
    ExperimentConfig b;
    CHECK(a.run_id() == b.run_id());

    b.set("experiment.output_dir", "elsewhere");
    CHECK(a.run_id() == b.run_id());

    b.set("loss.b", "0.85");
    CHECK(a.run_id() != b.run_id());

    ExperimentConfig c;
    c.set("train.seed", "9");
    CHECK(a.run_id() != c.run_id());
    CHECK(c.run_id().find("-s9") != std::string::npos);
}

TEST_CASE("loss options build the round robin teacher over all experts") {
    ExperimentConfig cfg;
    cfg.set("data.n_classes", "20");
    cfg.set("model.tier_sizes", "16");
    cfg.set("data.n_superclasses", "4");
    const LossOptions lo = cfg.loss_options();
    REQUIRE(lo.oracle_assignment.size() == 20);
    CHECK(lo.oracle_assignment[0] == 0);
    CHECK(lo.oracle_assignment[15] == 15);
    CHECK(lo.oracle_assignment[16] == 0);  // wraps
}
