#include "moeeco/losses.hpp"

#include <cmath>

#include "moeeco/data.hpp"
#include "moeeco/errors.hpp"

namespace moeeco {

double task_loss(const std::vector<RoutingOutcome>& outcomes, const std::vector<int>& labels) {
    if (outcomes.empty()) throw InvalidSpec("task_loss needs a non-empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& e = outcomes[i].ensemble_logits;
        const int n = static_cast<int>(e.size());
        sum += log_sum_exp_temp(e.data(), n, 1.0) - e[labels[i]];
    }
    return sum / static_cast<double>(outcomes.size());
}

double entropy_raw(const std::vector<std::vector<double>>& dists) {
    const int n_exp = static_cast<int>(dists.front().size());
    const double ln_n = std::log(static_cast<double>(n_exp));
    double sum = 0.0;
    for (const auto& s : dists) {
        double ent = 0.0;
        for (double p : s)
            if (p > 0.0) ent -= p * std::log(p);
        sum += ent;
    }
    return sum / (static_cast<double>(dists.size()) * ln_n);
}

double balance_raw(const std::vector<std::vector<double>>& dists,
                   const std::vector<std::array<int, 2>>& top2s, double kl_frac, double* kl_out,
                   double* var_out) {
    const int n_exp = static_cast<int>(dists.front().size());
    const double n = static_cast<double>(dists.size());

    std::vector<double> importance(n_exp, 0.0);
    for (const auto& s : dists)
        for (int k = 0; k < n_exp; ++k) importance[k] += s[k];
    for (double& v : importance) v /= n;

    double kl = std::log(static_cast<double>(n_exp));
    for (double v : importance)
        if (v > 0.0) kl += v * std::log(v);

    std::vector<int> counts(n_exp, 0);
    for (const auto& t : top2s) {
        ++counts[t[0]];
        ++counts[t[1]];
    }
    double cmean = 0.0;
    for (int c : counts) cmean += c;
    cmean /= n_exp;
    double cvar = 0.0;
    for (int c : counts) {
        const double d = c - cmean;
        cvar += d * d;
    }
    cvar /= n_exp;
    const double var_part = cmean > 0.0 ? cvar / (cmean * cmean) : 0.0;

    if (kl_out) *kl_out = kl;
    if (var_out) *var_out = var_part;
    return 2.0 * kl_frac * kl + 2.0 * (1.0 - kl_frac) * var_part;
}

double oracle_raw(const std::vector<std::vector<double>>& dists, const std::vector<int>& labels,
                  const std::vector<int>& assignment) {
    double sum = 0.0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
        const double p = dists[i][assignment[labels[i]]];
        sum += -std::log(p > 0.0 ? p : 5e-324);
    }
    return sum / static_cast<double>(dists.size());
}

double ortho_raw(const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                 int* degenerate_count) {
    double sum = 0.0;
    int n_ok = 0, n_bad = 0;
    for (const auto& [a, b] : pairs) {
        double d = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) {
            d += a[c] * b[c];
            na += a[c] * a[c];
            nb += b[c] * b[c];
        }
        if (na > 0.0 && nb > 0.0) {
            sum += d * d / (na * nb);
            ++n_ok;
        } else {
            ++n_bad;
        }
    }
    if (degenerate_count) *degenerate_count = n_bad;
    return n_ok > 0 ? sum / n_ok : 0.0;
}

std::vector<int> round_robin_assignment(int n_classes, int n_experts) {
    std::vector<int> out(n_classes);
    for (int c = 0; c < n_classes; ++c) out[c] = c % n_experts;
    return out;
}

LossBreakdown total_loss(const MoeModel& model, const LabeledBatch& batch, const HyperParams& hp,
                         double temp, const std::vector<int>& assignment, RoutingMode mode,
                         const Prng& rng, GradBuffer* grads, double balance_kl_frac,
                         bool parallel) {
    if (batch.n == 0) throw InvalidSpec("total_loss needs a non-empty batch");
    BatchWorkspace ws;
    batch_forward(model, batch, temp, mode, rng, ws, parallel);
    LossContext ctx;
    ctx.hp = &hp;
    ctx.temp = temp;
    ctx.oracle_assignment = &assignment;
    ctx.mode = mode;
    ctx.balance_kl_frac = balance_kl_frac;
    return batch_backward(model, batch, ws, ctx, grads, parallel);
}

}  // namespace moeeco
