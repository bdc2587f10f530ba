#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moeeco/linalg.hpp"
#include "moeeco/prng.hpp"

namespace moeeco {

struct LabeledBatch;

// Architectural tier labels over the expert pool, e.g. {8,4,4}, {4,4,4,4} or
// {16} for a flat pool. Tiers are a diagnostic coordinate only; routing is a
// flat softmax over all experts.
struct TierConfig {
    std::vector<int> tier_sizes;

    int n_experts() const;
    int n_tiers() const { return static_cast<int>(tier_sizes.size()); }
    int tier_of(int expert_id) const;
    std::string label() const;  // "8:4:4"
    void validate() const;      // throws InvalidConfig
};

struct Dims {
    int n_features = 16;
    int feature_dim = 64;
    int router_hidden = 32;
    int n_classes = 8;
};

struct AffineLayer {
    Matrix W;
    Vector b;
};

struct ExpertState {
    Vector prototype;   // unit-norm at init; takes no gradient from the loss
                        // stack (only the decoupled decay touches it)
    AffineLayer head;   // feature_dim -> n_classes
    int tier = 0;
};

struct MoeModel {
    Dims dims;
    TierConfig tiers;
    AffineLayer enc1, enc2;  // n_features -> feature_dim -> feature_dim, tanh after each
    AffineLayer rt1, rt2;    // feature_dim -> router_hidden -> N, tanh after rt1
    std::vector<ExpertState> experts;

    int n_experts() const { return static_cast<int>(experts.size()); }

    // Parameter registry in a fixed, documented order: enc1.W, enc1.b,
    // enc2.W, enc2.b, rt1.W, rt1.b, rt2.W, rt2.b, then per expert
    // (prototype, head.W, head.b). Group 0 = encoder, group 1 = experts and
    // router. Accumulation and update order follow this registry.
    struct ParamRef {
        std::string name;
        std::vector<double>* data;
        std::vector<int> shape;
        int group;
    };
    std::vector<ParamRef> params();
    std::size_t param_count();
};

// Per-sample routing outcome of one forward pass.
struct RoutingOutcome {
    std::vector<double> logits;          // [N]
    std::vector<double> dist;            // softmax(logits / T), uniform in warmup
    int top2[2] = {0, 0};
    double gates[2] = {0.0, 0.0};        // renormalized, first >= second
    std::vector<double> ensemble_logits; // [n_classes]
    double confidence = 0.0;             // max ensemble softmax probability
};

enum class RoutingMode {
    Learned,       // top-2 by logits, gates from a 2-way softmax
    RandomWarmup,  // top-2 uniform without replacement, gates fixed 0.5/0.5
    Pinned,        // selections supplied by the caller, gates as in Learned
};

struct Top2Gates {
    int first = 0;
    int second = 0;
    double gate_first = 0.0;
    double gate_second = 0.0;
};

// Two largest logits, ties to the lower id; gates are the 2-way softmax of
// the selected logits at temperature T. Selection itself is T-invariant.
Top2Gates select_top2(const double* logits, int n, double temp);

// Gates for a caller-chosen pair (Pinned mode and the warmup value path).
Top2Gates gates_for(const double* logits, int first, int second, double temp);

// Scaled-uniform weights (1/sqrt(fan_in)), zero biases, unit-norm Gaussian
// prototypes; one draw sequence in registry order from (seed, Weights).
MoeModel init_model(const TierConfig& tiers, const Dims& dims, std::uint64_t seed);

// Spec-level forward over a batch; rng drives warmup draws (split per
// sample index, so results do not depend on evaluation order).
std::vector<RoutingOutcome> forward(const MoeModel& model, const LabeledBatch& batch, double temp,
                                    RoutingMode mode, const Prng& rng);

// Argmax over ensemble logits, lowest index on ties.
int predict_label(const RoutingOutcome& outcome);

}  // namespace moeeco
