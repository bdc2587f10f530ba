#pragma once

#include "moeeco/kernels.hpp"
#include "moeeco/losses.hpp"

namespace moeeco::ref {

// Straightforward single-threaded re-implementation of the fused
// loss/gradient pass, accumulating per-sample contributions directly in
// sample order. Kept as the reference the OpenMP kernels are tested and
// benchmarked against; not used by the training path.
LossBreakdown total_loss(const MoeModel& model, const LabeledBatch& batch, const HyperParams& hp,
                         double temp, const std::vector<int>& assignment, RoutingMode mode,
                         const Prng& rng, GradBuffer* grads, double balance_kl_frac = 0.5);

}  // namespace moeeco::ref
