#include "moeeco/model.hpp"

#include <cmath>

#include "moeeco/data.hpp"
#include "moeeco/errors.hpp"
#include "moeeco/kernels.hpp"

namespace moeeco {

int TierConfig::n_experts() const {
    int n = 0;
    for (int s : tier_sizes) n += s;
    return n;
}

int TierConfig::tier_of(int expert_id) const {
    int cum = 0;
    for (std::size_t t = 0; t < tier_sizes.size(); ++t) {
        cum += tier_sizes[t];
        if (expert_id < cum) return static_cast<int>(t);
    }
    return static_cast<int>(tier_sizes.size()) - 1;
}

std::string TierConfig::label() const {
    std::string out;
    for (std::size_t t = 0; t < tier_sizes.size(); ++t) {
        if (t) out += ':';
        out += std::to_string(tier_sizes[t]);
    }
    return out;
}

void TierConfig::validate() const {
    if (tier_sizes.empty()) throw InvalidConfig("tier_sizes must be non-empty");
    for (int s : tier_sizes)
        if (s <= 0) throw InvalidConfig("tier sizes must be positive");
    if (n_experts() < 2) throw InvalidConfig("need at least 2 experts");
}

std::vector<MoeModel::ParamRef> MoeModel::params() {
    std::vector<ParamRef> out;
    auto mat = [&](const char* name, AffineLayer& l, int group) {
        out.push_back({std::string(name) + ".W", &l.W.a, {l.W.rows, l.W.cols}, group});
        out.push_back({std::string(name) + ".b", &l.b, {static_cast<int>(l.b.size())}, group});
    };
    mat("enc1", enc1, 0);
    mat("enc2", enc2, 0);
    mat("rt1", rt1, 1);
    mat("rt2", rt2, 1);
    for (std::size_t e = 0; e < experts.size(); ++e) {
        const std::string base = "expert" + std::to_string(e);
        out.push_back({base + ".prototype", &experts[e].prototype,
                       {static_cast<int>(experts[e].prototype.size())}, 1});
        mat((base + ".head").c_str(), experts[e].head, 1);
    }
    return out;
}

std::size_t MoeModel::param_count() {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.data->size();
    return n;
}

Top2Gates gates_for(const double* logits, int first, int second, double temp) {
    Top2Gates out;
    out.first = first;
    out.second = second;
    const double a = logits[first] / temp;
    const double b = logits[second] / temp;
    const double m = std::max(a, b);
    const double ea = std::exp(a - m);
    const double eb = std::exp(b - m);
    out.gate_first = ea / (ea + eb);
    out.gate_second = eb / (ea + eb);
    return out;
}

Top2Gates select_top2(const double* logits, int n, double temp) {
    int first = 0;
    for (int i = 1; i < n; ++i)
        if (logits[i] > logits[first]) first = i;
    int second = first == 0 ? 1 : 0;
    for (int i = 0; i < n; ++i) {
        if (i == first) continue;
        if (logits[i] > logits[second]) second = i;
    }
    return gates_for(logits, first, second, temp);
}

namespace {

void init_affine(AffineLayer& l, int rows, int cols, Prng& rng) {
    l.W = Matrix(rows, cols);
    l.b.assign(rows, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& w : l.W.a) w = scale * (2.0 * rng.next_double() - 1.0);
}

}  // namespace

MoeModel init_model(const TierConfig& tiers, const Dims& dims, std::uint64_t seed) {
    tiers.validate();
    if (dims.n_features <= 0 || dims.feature_dim <= 0 || dims.router_hidden <= 0 ||
        dims.n_classes <= 0)
        throw InvalidConfig("model dims must be positive");

    MoeModel m;
    m.dims = dims;
    m.tiers = tiers;
    const int n = tiers.n_experts();

    Prng rng(seed, Stream::Weights);
    init_affine(m.enc1, dims.feature_dim, dims.n_features, rng);
    init_affine(m.enc2, dims.feature_dim, dims.feature_dim, rng);
    init_affine(m.rt1, dims.router_hidden, dims.feature_dim, rng);
    init_affine(m.rt2, n, dims.router_hidden, rng);

    m.experts.resize(n);
    for (int e = 0; e < n; ++e) {
        ExpertState& ex = m.experts[e];
        ex.tier = tiers.tier_of(e);
        ex.prototype.resize(dims.feature_dim);
        double norm2 = 0.0;
        for (double& v : ex.prototype) {
            v = rng.next_gaussian();
            norm2 += v * v;
        }
        const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 1.0;
        for (double& v : ex.prototype) v *= inv;
        init_affine(ex.head, dims.n_classes, dims.feature_dim, rng);
    }
    return m;
}

std::vector<RoutingOutcome> forward(const MoeModel& model, const LabeledBatch& batch, double temp,
                                    RoutingMode mode, const Prng& rng) {
    BatchWorkspace ws;
    batch_forward(model, batch, temp, mode, rng, ws, /*parallel=*/false);

    const int n_exp = model.n_experts();
    const int n_cls = model.dims.n_classes;
    std::vector<RoutingOutcome> out(batch.n);
    for (int i = 0; i < batch.n; ++i) {
        RoutingOutcome& o = out[i];
        o.logits.assign(ws.logits.row(i), ws.logits.row(i) + n_exp);
        if (mode == RoutingMode::RandomWarmup)
            o.dist.assign(n_exp, 1.0 / n_exp);
        else
            o.dist.assign(ws.dist.row(i), ws.dist.row(i) + n_exp);
        o.top2[0] = ws.first[i];
        o.top2[1] = ws.second[i];
        o.gates[0] = ws.gate_first[i];
        o.gates[1] = ws.gate_second[i];
        o.ensemble_logits.assign(ws.ensemble.row(i), ws.ensemble.row(i) + n_cls);
        o.confidence = ws.confidence[i];
    }
    return out;
}

int predict_label(const RoutingOutcome& outcome) {
    return argmax_lowest_tie(outcome.ensemble_logits.data(),
                             static_cast<int>(outcome.ensemble_logits.size()));
}

}  // namespace moeeco
