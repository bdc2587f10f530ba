#pragma once

#include <array>
#include <vector>

#include "moeeco/hyperparams.hpp"
#include "moeeco/kernels.hpp"
#include "moeeco/model.hpp"
#include "moeeco/prng.hpp"

namespace moeeco {

struct LabeledBatch;

// The five-term objective:
//   total = task - H*entropy_raw + B*balance_raw + O*oracle_raw + ortho_w*ortho_raw
// Raw values are unweighted; *_term fields carry the weighted contribution.
struct LossBreakdown {
    double task = 0.0;
    double entropy_raw = 0.0;  // in [0, 1], normalized by ln N
    double balance_raw = 0.0;
    double oracle_raw = 0.0;
    double ortho_raw = 0.0;
    double entropy_term = 0.0;  // -H * entropy_raw
    double balance_term = 0.0;
    double oracle_term = 0.0;
    double ortho_term = 0.0;
    double total = 0.0;
    double balance_kl = 0.0;   // KL(importance || uniform) component
    double balance_var = 0.0;  // Var(count)/mean(count)^2 component
    int ortho_degenerate = 0;  // samples skipped for a zero expert output
};

// Mean cross-entropy of softmax(ensemble_logits) against labels.
double task_loss(const std::vector<RoutingOutcome>& outcomes, const std::vector<int>& labels);

// Mean Shannon entropy of the routing distributions, normalized by ln N.
double entropy_raw(const std::vector<std::vector<double>>& dists);

// KL(mean routing importance || uniform) + Var(top-2 counts)/mean(count)^2,
// combined with weights (2*kl_frac, 2*(1-kl_frac)) so 0.5 gives the plain
// 1:1 sum. Components are reported through kl_out / var_out when non-null.
double balance_raw(const std::vector<std::vector<double>>& dists,
                   const std::vector<std::array<int, 2>>& top2s, double kl_frac = 0.5,
                   double* kl_out = nullptr, double* var_out = nullptr);

// Mean cross-entropy of each routing distribution against the one-hot
// teacher expert assignment[label].
double oracle_raw(const std::vector<std::vector<double>>& dists, const std::vector<int>& labels,
                  const std::vector<int>& assignment);

// Mean squared cosine similarity between the two selected experts' logit
// vectors; samples where either vector is exactly zero are skipped and
// counted in degenerate_count.
double ortho_raw(const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                 int* degenerate_count = nullptr);

// Fixed class -> expert teacher map, frozen at init: class c -> expert c % N.
std::vector<int> round_robin_assignment(int n_classes, int n_experts);

// Full objective and gradient set in one fused pass; rng drives warmup
// selection draws. grads may be null for a value-only evaluation.
LossBreakdown total_loss(const MoeModel& model, const LabeledBatch& batch, const HyperParams& hp,
                         double temp, const std::vector<int>& assignment, RoutingMode mode,
                         const Prng& rng, GradBuffer* grads, double balance_kl_frac = 0.5,
                         bool parallel = true);

}  // namespace moeeco
