#include "moeeco/trainer.hpp"

#include <cmath>

#include "moeeco/errors.hpp"
#include "moeeco/kernels.hpp"
#include "moeeco/losses.hpp"
#include "moeeco/prng.hpp"

namespace moeeco {

void TrainConfig::validate() const {
    if (epochs < 0) throw InvalidConfig("epochs must be >= 0");
    if (eval_every < 1) throw InvalidConfig("eval_every must be >= 1");
    if (epochs > 0 && epochs < eval_every) throw InvalidConfig("epochs must be >= eval_every");
    if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
    if (!(lr_encoder > 0.0) || !(lr_experts_router > 0.0))
        throw InvalidConfig("learning rates must be > 0");
    if (weight_decay < 0.0) throw InvalidConfig("weight_decay must be >= 0");
    if (checkpoint_every < 0) throw InvalidConfig("checkpoint_every must be >= 0");
}

RunTrajectory train(MoeModel& model, const Dataset& data, const HyperParams& hp,
                    const TrainConfig& tc, const LossOptions& lo, AdamW& opt,
                    const TrainSinks& sinks, const ResumePoint* resume,
                    const EcologyOptions& eco) {
    hp.validate();
    tc.validate();
    if (data.train.n == 0 || data.test.n == 0) throw InvalidSpec("training data must be non-empty");
    if (static_cast<int>(lo.oracle_assignment.size()) != data.n_classes)
        throw InvalidConfig("oracle assignment must cover every class");

    RunTrajectory traj;
    if (tc.epochs == 0) return traj;

    const int n_train = data.train.n;
    const int steps_per_epoch = (n_train + tc.batch_size - 1) / tc.batch_size;
    const std::uint64_t total_steps =
        static_cast<std::uint64_t>(tc.epochs) * static_cast<std::uint64_t>(steps_per_epoch);

    int start_epoch = 0;
    std::uint64_t global_step = 0;
    if (resume) {
        start_epoch = resume->epoch_completed + 1;
        global_step = resume->global_step;
    } else {
        opt.init(model);
    }

    const Prng shuffle_root(tc.seed, Stream::Shuffle);
    const Prng routing_root(tc.seed, Stream::Routing);

    GradBuffer grads = GradBuffer::like(model);
    BatchWorkspace ws;
    LabeledBatch minibatch;
    minibatch.n_features = data.train.n_features;

    std::vector<int> perm(n_train);

    for (int epoch = start_epoch; epoch < tc.epochs; ++epoch) {
        const RoutingMode mode =
            epoch < hp.warmup_epochs ? RoutingMode::RandomWarmup : RoutingMode::Learned;
        const double temp = temperature_at(hp, epoch);

        // Fresh Fisher-Yates reshuffle per epoch from a per-epoch stream.
        Prng shuffle_rng = shuffle_root.split(static_cast<std::uint64_t>(epoch));
        for (int i = 0; i < n_train; ++i) perm[i] = i;
        for (int i = n_train - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.next_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(perm[i], perm[j]);
        }

        LossBreakdown epoch_loss;
        const Prng epoch_routing = routing_root.split(static_cast<std::uint64_t>(epoch));

        for (int b = 0; b < steps_per_epoch; ++b) {
            const int lo_i = b * tc.batch_size;
            const int hi_i = std::min(n_train, lo_i + tc.batch_size);
            const int bn = hi_i - lo_i;
            minibatch.n = bn;
            minibatch.features.resize(static_cast<std::size_t>(bn) * minibatch.n_features);
            minibatch.labels.resize(bn);
            for (int i = 0; i < bn; ++i) {
                const int src = perm[lo_i + i];
                minibatch.labels[i] = data.train.labels[src];
                const double* row = data.train.row(src);
                std::copy(row, row + minibatch.n_features,
                          minibatch.features.begin() + static_cast<std::size_t>(i) * minibatch.n_features);
            }

            const Prng batch_rng = epoch_routing.split(static_cast<std::uint64_t>(b));
            batch_forward(model, minibatch, temp, mode, batch_rng, ws, /*parallel=*/true);
            LossContext ctx;
            ctx.hp = &hp;
            ctx.temp = temp;
            ctx.oracle_assignment = &lo.oracle_assignment;
            ctx.mode = mode;
            ctx.balance_kl_frac = lo.balance_kl_frac;
            const LossBreakdown bd = batch_backward(model, minibatch, ws, ctx, &grads, true);
            if (!std::isfinite(bd.total)) throw NonFiniteLoss(epoch, b);

            const double scale = cosine_lr_scale(global_step, total_steps);
            opt.step(model, grads, {tc.lr_encoder * scale, tc.lr_experts_router * scale},
                     tc.weight_decay);
            ++global_step;

            const double w = static_cast<double>(bn) / n_train;
            epoch_loss.task += w * bd.task;
            epoch_loss.entropy_raw += w * bd.entropy_raw;
            epoch_loss.balance_raw += w * bd.balance_raw;
            epoch_loss.oracle_raw += w * bd.oracle_raw;
            epoch_loss.ortho_raw += w * bd.ortho_raw;
            epoch_loss.entropy_term += w * bd.entropy_term;
            epoch_loss.balance_term += w * bd.balance_term;
            epoch_loss.oracle_term += w * bd.oracle_term;
            epoch_loss.ortho_term += w * bd.ortho_term;
            epoch_loss.total += w * bd.total;
            epoch_loss.balance_kl += w * bd.balance_kl;
            epoch_loss.balance_var += w * bd.balance_var;
            epoch_loss.ortho_degenerate += bd.ortho_degenerate;
        }

        if (epoch % tc.eval_every == 0 || epoch == tc.epochs - 1) {
            const EvalResult ev = evaluate(model, data.test, temp, eco);
            TrajectoryRecord rec;
            rec.epoch = epoch;
            rec.warmup = mode == RoutingMode::RandomWarmup;
            rec.temperature = temp;
            if (hp.o + hp.b > 0.0) rec.e_value = compute_E(hp, temp);
            rec.top1 = ev.top1;
            rec.loss = epoch_loss;
            rec.ecology = ev.report;
            traj.records.push_back(rec);
            if (sinks.on_eval) sinks.on_eval(traj.records.back());
        }
        if (sinks.on_checkpoint && tc.checkpoint_every > 0 &&
            (epoch + 1) % tc.checkpoint_every == 0)
            sinks.on_checkpoint(epoch, global_step);
    }
    return traj;
}

}  // namespace moeeco
