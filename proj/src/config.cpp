#include "moeeco/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "moeeco/errors.hpp"
#include "moeeco/losses.hpp"

namespace moeeco {

namespace {

struct KeyDef {
    const char* key;
    const char* def;
};

// The full schema with defaults. Keep the README table in sync.
const std::vector<KeyDef>& schema() {
    static const std::vector<KeyDef> defs = {
        {"experiment.name", "run"},
        {"experiment.output_dir", "runs"},
        {"data.source", "synthetic"},
        {"data.csv_path", ""},
        {"data.csv_test_path", ""},
        {"data.n_classes", "8"},
        {"data.n_features", "16"},
        {"data.samples_per_class", "200"},
        {"data.n_superclasses", "4"},
        {"data.intra_spread", "1.0"},
        {"data.inter_spread", "1.0"},
        {"model.tier_sizes", "8,4,4"},
        {"model.feature_dim", "64"},
        {"model.router_hidden", "32"},
        {"model.n_classes", "0"},
        {"routing.t_init", "3.0"},
        {"routing.t_end", "0.3"},
        {"routing.anneal_epochs", "30"},
        {"routing.warmup_epochs", "15"},
        {"loss.h", "0.1"},
        {"loss.o", "0.15"},
        {"loss.b", "0.4"},
        {"loss.ortho", "0.0"},
        {"loss.balance_kl_frac", "0.5"},
        {"loss.complexity_fn", "one"},
        {"loss.oracle_assignment", "round_robin"},
        {"ecology.hard_threshold", "0.4"},
        {"ecology.easy_threshold", "0.7"},
        {"train.epochs", "60"},
        {"train.batch_size", "64"},
        {"train.lr_encoder", "1e-4"},
        {"train.lr_experts_router", "1e-3"},
        {"train.weight_decay", "5e-4"},
        {"train.eval_every", "10"},
        {"train.seed", "1"},
        {"train.checkpoint_every", "0"},
    };
    return defs;
}

std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

long parse_long(const std::string& key, const std::string& v) {
    long out = 0;
    auto rc = std::from_chars(v.data(), v.data() + v.size(), out);
    if (rc.ec != std::errc{} || rc.ptr != v.data() + v.size())
        throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto rc = std::from_chars(v.data(), v.data() + v.size(), out);
    if (rc.ec != std::errc{} || rc.ptr != v.data() + v.size())
        throw ConfigError("config key '" + key + "': bad number '" + v + "'");
    return out;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
    for (const KeyDef& d : schema()) kv_[d.key] = d.def;
}

const std::vector<std::string>& ExperimentConfig::known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const KeyDef& d : schema()) out.push_back(d.key);
        return out;
    }();
    return keys;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second = value;
}

const std::string& ExperimentConfig::raw(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

void ExperimentConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void ExperimentConfig::apply_override(const std::string& kev) {
    const std::size_t eq = kev.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kev + "'");
    set(trim(kev.substr(0, eq)), trim(kev.substr(eq + 1)));
}

void ExperimentConfig::validate() const {
    dataset_spec();
    hyper_params().validate();
    train_config().validate();
    tier_config().validate();
    const Dims d = dims();
    if (d.feature_dim <= 0 || d.router_hidden <= 0)
        throw ConfigError("model dims must be positive");
    const std::string src = data_source();
    if (src != "synthetic" && src != "csv")
        throw ConfigError("data.source must be synthetic|csv");
    if (src == "csv" && csv_path().empty())
        throw ConfigError("data.csv_path required when data.source = csv");
    const long model_classes = parse_long("model.n_classes", raw("model.n_classes"));
    if (model_classes != 0 && model_classes != parse_long("data.n_classes", raw("data.n_classes")))
        throw ConfigError("model.n_classes must be 0 (inherit) or equal data.n_classes");
    complexity_fn_from_name(raw("loss.complexity_fn"));
    if (raw("loss.oracle_assignment") != "round_robin")
        throw ConfigError("loss.oracle_assignment must be round_robin");
    const double frac = parse_double("loss.balance_kl_frac", raw("loss.balance_kl_frac"));
    if (frac < 0.0 || frac > 1.0) throw ConfigError("loss.balance_kl_frac must be in [0,1]");
    const EcologyOptions eco = ecology_options();
    if (!(eco.hard_threshold > 0.0) || !(eco.easy_threshold < 1.0) ||
        eco.hard_threshold >= eco.easy_threshold)
        throw ConfigError("ecology thresholds must satisfy 0 < hard < easy < 1");
}

DatasetSpec ExperimentConfig::dataset_spec() const {
    DatasetSpec s;
    s.n_classes = static_cast<int>(parse_long("data.n_classes", raw("data.n_classes")));
    s.n_features = static_cast<int>(parse_long("data.n_features", raw("data.n_features")));
    s.samples_per_class =
        static_cast<int>(parse_long("data.samples_per_class", raw("data.samples_per_class")));
    s.n_superclasses =
        static_cast<int>(parse_long("data.n_superclasses", raw("data.n_superclasses")));
    s.intra_spread = parse_double("data.intra_spread", raw("data.intra_spread"));
    s.inter_spread = parse_double("data.inter_spread", raw("data.inter_spread"));
    s.seed = static_cast<std::uint64_t>(parse_long("train.seed", raw("train.seed")));
    try {
        s.validate();
    } catch (const InvalidSpec& e) {
        throw ConfigError(std::string("data.*: ") + e.what());
    }
    return s;
}

HyperParams ExperimentConfig::hyper_params() const {
    HyperParams hp;
    hp.t_init = parse_double("routing.t_init", raw("routing.t_init"));
    hp.t_end = parse_double("routing.t_end", raw("routing.t_end"));
    hp.anneal_epochs =
        static_cast<int>(parse_long("routing.anneal_epochs", raw("routing.anneal_epochs")));
    hp.warmup_epochs =
        static_cast<int>(parse_long("routing.warmup_epochs", raw("routing.warmup_epochs")));
    hp.h = parse_double("loss.h", raw("loss.h"));
    hp.o = parse_double("loss.o", raw("loss.o"));
    hp.b = parse_double("loss.b", raw("loss.b"));
    hp.ortho = parse_double("loss.ortho", raw("loss.ortho"));
    return hp;
}

TrainConfig ExperimentConfig::train_config() const {
    TrainConfig tc;
    tc.epochs = static_cast<int>(parse_long("train.epochs", raw("train.epochs")));
    tc.batch_size = static_cast<int>(parse_long("train.batch_size", raw("train.batch_size")));
    tc.lr_encoder = parse_double("train.lr_encoder", raw("train.lr_encoder"));
    tc.lr_experts_router =
        parse_double("train.lr_experts_router", raw("train.lr_experts_router"));
    tc.weight_decay = parse_double("train.weight_decay", raw("train.weight_decay"));
    tc.eval_every = static_cast<int>(parse_long("train.eval_every", raw("train.eval_every")));
    tc.seed = static_cast<std::uint64_t>(parse_long("train.seed", raw("train.seed")));
    tc.checkpoint_every =
        static_cast<int>(parse_long("train.checkpoint_every", raw("train.checkpoint_every")));
    return tc;
}

TierConfig ExperimentConfig::tier_config() const {
    TierConfig t;
    const std::string& v = raw("model.tier_sizes");
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const std::string c = trim(cell);
        if (c.empty()) continue;
        t.tier_sizes.push_back(static_cast<int>(parse_long("model.tier_sizes", c)));
    }
    return t;
}

Dims ExperimentConfig::dims() const {
    Dims d;
    d.n_features = static_cast<int>(parse_long("data.n_features", raw("data.n_features")));
    d.feature_dim = static_cast<int>(parse_long("model.feature_dim", raw("model.feature_dim")));
    d.router_hidden =
        static_cast<int>(parse_long("model.router_hidden", raw("model.router_hidden")));
    const long model_classes = parse_long("model.n_classes", raw("model.n_classes"));
    d.n_classes = model_classes > 0
                      ? static_cast<int>(model_classes)
                      : static_cast<int>(parse_long("data.n_classes", raw("data.n_classes")));
    return d;
}

LossOptions ExperimentConfig::loss_options() const {
    LossOptions lo;
    lo.balance_kl_frac = parse_double("loss.balance_kl_frac", raw("loss.balance_kl_frac"));
    lo.oracle_assignment = round_robin_assignment(dims().n_classes, tier_config().n_experts());
    return lo;
}

EcologyOptions ExperimentConfig::ecology_options() const {
    EcologyOptions eco;
    eco.hard_threshold = parse_double("ecology.hard_threshold", raw("ecology.hard_threshold"));
    eco.easy_threshold = parse_double("ecology.easy_threshold", raw("ecology.easy_threshold"));
    return eco;
}

std::string ExperimentConfig::name() const { return raw("experiment.name"); }
std::string ExperimentConfig::output_dir() const { return raw("experiment.output_dir"); }
std::string ExperimentConfig::data_source() const { return raw("data.source"); }
std::string ExperimentConfig::csv_path() const { return raw("data.csv_path"); }
std::string ExperimentConfig::csv_test_path() const {
    const std::string& t = raw("data.csv_test_path");
    return t.empty() ? csv_path() : t;
}

std::string ExperimentConfig::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

std::string ExperimentConfig::hash_hex() const {
    std::string hashed;
    for (const auto& [k, v] : kv_) {
        if (k == "experiment.output_dir") continue;
        hashed += k;
        hashed += '=';
        hashed += v;
        hashed += '\n';
    }
    const std::uint64_t h = fnv1a(hashed);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%08x", static_cast<unsigned>(h ^ (h >> 32)));
    return buf;
}

std::string ExperimentConfig::run_id() const {
    return name() + "-" + hash_hex() + "-s" + raw("train.seed");
}

ExperimentConfig config_from_text(const std::string& canonical_text) {
    ExperimentConfig cfg;
    std::stringstream ss(canonical_text);
    std::string line;
    while (std::getline(ss, line)) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("bad embedded config line: " + t);
        cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

}  // namespace moeeco
