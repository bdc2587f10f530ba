#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "moeeco/data.hpp"
#include "moeeco/ecology.hpp"
#include "moeeco/hyperparams.hpp"
#include "moeeco/model.hpp"
#include "moeeco/optimizer.hpp"

namespace moeeco {

struct TrainConfig {
    int epochs = 60;
    int batch_size = 64;
    double lr_encoder = 1e-4;
    double lr_experts_router = 1e-3;
    double weight_decay = 5e-4;
    int eval_every = 10;
    std::uint64_t seed = 1;
    int checkpoint_every = 0;  // 0: no periodic checkpoint callbacks

    void validate() const;  // throws InvalidConfig
};

struct LossOptions {
    std::vector<int> oracle_assignment;  // class -> expert teacher map
    double balance_kl_frac = 0.5;
};

struct TrainSinks {
    std::function<void(const TrajectoryRecord&)> on_eval;
    std::function<void(int epoch_completed, std::uint64_t global_step)> on_checkpoint;
};

// Continuation point for checkpoint resume: the run proceeds with epoch
// epoch_completed + 1 and the given global step (the optimizer state is
// restored separately).
struct ResumePoint {
    int epoch_completed = -1;
    std::uint64_t global_step = 0;
};

// One full training run. Per epoch: pick the routing mode (RandomWarmup
// while epoch < warmup_epochs), set T from the annealing schedule, iterate
// freshly shuffled mini-batches, and take AdamW steps with per-group
// learning rates cosine-decayed to zero over the whole run. Every
// eval_every epochs (and on the final epoch) the test split is evaluated at
// the current T and a record is appended. All randomness is derived
// statelessly from (seed, epoch, batch, sample), so a resumed run replays
// the uninterrupted one exactly. Throws NonFiniteLoss on a non-finite total.
RunTrajectory train(MoeModel& model, const Dataset& data, const HyperParams& hp,
                    const TrainConfig& tc, const LossOptions& lo, AdamW& opt,
                    const TrainSinks& sinks = {}, const ResumePoint* resume = nullptr,
                    const EcologyOptions& eco = {});

}  // namespace moeeco
