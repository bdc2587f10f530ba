#pragma once

#include <vector>

#include "moeeco/hyperparams.hpp"
#include "moeeco/linalg.hpp"
#include "moeeco/model.hpp"
#include "moeeco/prng.hpp"

namespace moeeco {

struct LabeledBatch;
struct LossBreakdown;

// Per-sample activations of one batch pass, row i = sample i. `dist` is
// always the router softmax at the given temperature; warmup's uniform
// outcome distribution is synthesized only at the RoutingOutcome level.
struct BatchWorkspace {
    int n = 0;
    Matrix h1;        // [n x feature_dim]
    Matrix h;         // [n x feature_dim]
    Matrix q;         // [n x router_hidden]
    Matrix logits;    // [n x N]
    Matrix dist;      // [n x N]
    std::vector<int> first, second;
    std::vector<double> gate_first, gate_second;
    Matrix y_first;   // [n x n_classes]
    Matrix y_second;  // [n x n_classes]
    Matrix ensemble;  // [n x n_classes]
    Matrix ens_prob;  // [n x n_classes]
    std::vector<double> confidence;
};

// Gradient storage aligned with MoeModel::params() order. Fixed block
// indices below let the kernels address slots without name lookups.
struct GradBuffer {
    std::vector<std::vector<double>> g;

    static GradBuffer like(const MoeModel& model);
    void zero();
    void add(const GradBuffer& other);
};

namespace pidx {
constexpr int kEnc1W = 0, kEnc1b = 1, kEnc2W = 2, kEnc2b = 3;
constexpr int kRt1W = 4, kRt1b = 5, kRt2W = 6, kRt2b = 7;
constexpr int kExpertBase = 8;
inline int prototype(int e) { return kExpertBase + 3 * e; }
inline int head_w(int e) { return kExpertBase + 3 * e + 1; }
inline int head_b(int e) { return kExpertBase + 3 * e + 2; }
}  // namespace pidx

// Samples per accumulation block. Per-sample gradients are accumulated
// serially inside a block and block buffers are reduced in index order, so
// results are bitwise identical for any thread count.
constexpr int kGradBlock = 16;

// Forward over a batch. In Pinned mode, selections come from pinned_first /
// pinned_second. In RandomWarmup mode the draw for sample i comes from
// rng.split(i), independent of evaluation order.
void batch_forward(const MoeModel& model, const LabeledBatch& batch, double temp, RoutingMode mode,
                   const Prng& rng, BatchWorkspace& ws, bool parallel,
                   const int* pinned_first = nullptr, const int* pinned_second = nullptr);

struct LossContext {
    const HyperParams* hp = nullptr;
    double temp = 1.0;
    const std::vector<int>* oracle_assignment = nullptr;  // class -> expert
    RoutingMode mode = RoutingMode::Learned;
    double balance_kl_frac = 0.5;  // KL weight 2f, count-variance weight 2(1-f)
};

// Loss values and, when grads != nullptr, the full gradient set. The top-2
// selection is treated as constant during differentiation: the router sees
// gradient through the gate softmax over the selected logits (Learned and
// Pinned modes) and through entropy / balance-KL / oracle over its full
// softmax. The count-variance part of balance contributes value only.
LossBreakdown batch_backward(const MoeModel& model, const LabeledBatch& batch,
                             const BatchWorkspace& ws, const LossContext& ctx, GradBuffer* grads,
                             bool parallel);

}  // namespace moeeco
