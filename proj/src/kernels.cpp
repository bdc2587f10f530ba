#include "moeeco/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <cstring>

#include "moeeco/data.hpp"
#include "moeeco/losses.hpp"

namespace moeeco {

GradBuffer GradBuffer::like(const MoeModel& model) {
    const Dims& d = model.dims;
    const int n = model.n_experts();
    GradBuffer out;
    out.g.reserve(static_cast<std::size_t>(pidx::kExpertBase + 3 * n));
    auto push = [&](std::size_t sz) { out.g.emplace_back(sz, 0.0); };
    push(static_cast<std::size_t>(d.feature_dim) * d.n_features);  // enc1.W
    push(d.feature_dim);                                           // enc1.b
    push(static_cast<std::size_t>(d.feature_dim) * d.feature_dim); // enc2.W
    push(d.feature_dim);                                           // enc2.b
    push(static_cast<std::size_t>(d.router_hidden) * d.feature_dim);
    push(d.router_hidden);
    push(static_cast<std::size_t>(n) * d.router_hidden);
    push(n);
    for (int e = 0; e < n; ++e) {
        push(d.feature_dim);                                        // prototype
        push(static_cast<std::size_t>(d.n_classes) * d.feature_dim);
        push(d.n_classes);
    }
    return out;
}

void GradBuffer::zero() {
    for (auto& blk : g) std::memset(blk.data(), 0, blk.size() * sizeof(double));
}

void GradBuffer::add(const GradBuffer& other) {
    for (std::size_t b = 0; b < g.size(); ++b) {
        const std::vector<double>& src = other.g[b];
        std::vector<double>& dst = g[b];
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
}

namespace {

void forward_one(const MoeModel& model, const LabeledBatch& batch, double temp, RoutingMode mode,
                 const Prng& rng, BatchWorkspace& ws, int i, const int* pinned_first,
                 const int* pinned_second) {
    const Dims& dm = model.dims;
    const int n_exp = model.n_experts();
    const double* x = batch.row(i);

    double* h1 = ws.h1.row(i);
    double* h = ws.h.row(i);
    double* q = ws.q.row(i);
    double* z = ws.logits.row(i);
    double* s = ws.dist.row(i);

    affine(model.enc1.W, model.enc1.b, x, h1);
    tanh_inplace(h1, dm.feature_dim);
    affine(model.enc2.W, model.enc2.b, h1, h);
    tanh_inplace(h, dm.feature_dim);
    affine(model.rt1.W, model.rt1.b, h, q);
    tanh_inplace(q, dm.router_hidden);
    affine(model.rt2.W, model.rt2.b, q, z);
    softmax_temp(z, n_exp, temp, s);

    Top2Gates sel;
    switch (mode) {
        case RoutingMode::Learned:
            sel = select_top2(z, n_exp, temp);
            break;
        case RoutingMode::RandomWarmup: {
            Prng draw = rng.split(static_cast<std::uint64_t>(i));
            const int a = static_cast<int>(draw.next_below(n_exp));
            int b = static_cast<int>(draw.next_below(n_exp - 1));
            if (b >= a) ++b;
            sel.first = a;
            sel.second = b;
            sel.gate_first = 0.5;
            sel.gate_second = 0.5;
            break;
        }
        case RoutingMode::Pinned:
            sel = gates_for(z, pinned_first[i], pinned_second[i], temp);
            break;
    }
    ws.first[i] = sel.first;
    ws.second[i] = sel.second;
    ws.gate_first[i] = sel.gate_first;
    ws.gate_second[i] = sel.gate_second;

    double* yf = ws.y_first.row(i);
    double* ys = ws.y_second.row(i);
    double* en = ws.ensemble.row(i);
    double* pe = ws.ens_prob.row(i);
    const ExpertState& ef = model.experts[sel.first];
    const ExpertState& es = model.experts[sel.second];
    affine(ef.head.W, ef.head.b, h, yf);
    affine(es.head.W, es.head.b, h, ys);
    for (int c = 0; c < dm.n_classes; ++c) en[c] = sel.gate_first * yf[c] + sel.gate_second * ys[c];
    softmax_temp(en, dm.n_classes, 1.0, pe);
    ws.confidence[i] = pe[argmax_lowest_tie(pe, dm.n_classes)];
}

}  // namespace

void batch_forward(const MoeModel& model, const LabeledBatch& batch, double temp, RoutingMode mode,
                   const Prng& rng, BatchWorkspace& ws, bool parallel, const int* pinned_first,
                   const int* pinned_second) {
    const Dims& dm = model.dims;
    const int n_exp = model.n_experts();
    const int n = batch.n;
    ws.n = n;
    ws.h1 = Matrix(n, dm.feature_dim);
    ws.h = Matrix(n, dm.feature_dim);
    ws.q = Matrix(n, dm.router_hidden);
    ws.logits = Matrix(n, n_exp);
    ws.dist = Matrix(n, n_exp);
    ws.first.assign(n, 0);
    ws.second.assign(n, 0);
    ws.gate_first.assign(n, 0.0);
    ws.gate_second.assign(n, 0.0);
    ws.y_first = Matrix(n, dm.n_classes);
    ws.y_second = Matrix(n, dm.n_classes);
    ws.ensemble = Matrix(n, dm.n_classes);
    ws.ens_prob = Matrix(n, dm.n_classes);
    ws.confidence.assign(n, 0.0);

    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i)
            forward_one(model, batch, temp, mode, rng, ws, i, pinned_first, pinned_second);
    } else {
        for (int i = 0; i < n; ++i)
            forward_one(model, batch, temp, mode, rng, ws, i, pinned_first, pinned_second);
    }
}

namespace {

// Per-block scratch for the backward pass.
struct Scratch {
    std::vector<double> de, dyf, dys, dz, dq, dp, dh, dv, dh1, du;
    Scratch(const Dims& dm, int n_exp)
        : de(dm.n_classes),
          dyf(dm.n_classes),
          dys(dm.n_classes),
          dz(n_exp),
          dq(dm.router_hidden),
          dp(dm.router_hidden),
          dh(dm.feature_dim),
          dv(dm.feature_dim),
          dh1(dm.feature_dim),
          du(dm.feature_dim) {}
};

// Gradient contribution of sample i, accumulated into gb. kappa[k] holds
// ln(importance_k) + 1 (valid wherever dist mass is nonzero) and ortho_scale
// is ortho_weight / n_nondegenerate (0 disables the path).
void backward_one(const MoeModel& model, const LabeledBatch& batch, const BatchWorkspace& ws,
                  const LossContext& ctx, int i, const std::vector<double>& kappa,
                  double ortho_scale, GradBuffer& gb, Scratch& t) {
    const Dims& dm = model.dims;
    const int n_exp = model.n_experts();
    const int n_cls = dm.n_classes;
    const double inv_n = 1.0 / ws.n;
    const double temp = ctx.temp;
    const HyperParams& hp = *ctx.hp;
    const bool gate_path = ctx.mode != RoutingMode::RandomWarmup;

    const double* x = batch.row(i);
    const double* h1 = ws.h1.row(i);
    const double* h = ws.h.row(i);
    const double* q = ws.q.row(i);
    const double* z = ws.logits.row(i);
    const double* s = ws.dist.row(i);
    const double* yf = ws.y_first.row(i);
    const double* ys = ws.y_second.row(i);
    const double* pe = ws.ens_prob.row(i);
    const int f = ws.first[i];
    const int sec = ws.second[i];
    const double gf = ws.gate_first[i];
    const double gs = ws.gate_second[i];
    const int label = batch.labels[i];

    // Router logit gradient from entropy, oracle, and balance-KL.
    std::fill(t.dz.begin(), t.dz.end(), 0.0);
    const double lse = log_sum_exp_temp(z, n_exp, temp);
    if (hp.h > 0.0) {
        double ent = 0.0;
        for (int k = 0; k < n_exp; ++k)
            if (s[k] > 0.0) ent -= s[k] * (z[k] / temp - lse);
        const double ch = -hp.h / std::log(static_cast<double>(n_exp)) * inv_n;
        for (int k = 0; k < n_exp; ++k)
            if (s[k] > 0.0) t.dz[k] += ch / temp * s[k] * (-(z[k] / temp - lse) - ent);
    }
    if (hp.o > 0.0) {
        const int teacher = (*ctx.oracle_assignment)[label];
        const double co = hp.o * inv_n;
        for (int k = 0; k < n_exp; ++k)
            t.dz[k] += co / temp * (s[k] - (k == teacher ? 1.0 : 0.0));
    }
    if (hp.b > 0.0) {
        const double cb = hp.b * (2.0 * ctx.balance_kl_frac) * inv_n;
        double cdot = 0.0;
        for (int k = 0; k < n_exp; ++k)
            if (s[k] > 0.0) cdot += s[k] * kappa[k];
        for (int k = 0; k < n_exp; ++k)
            if (s[k] > 0.0) t.dz[k] += cb / temp * s[k] * (kappa[k] - cdot);
    }

    // Task cross-entropy through the ensemble.
    for (int c = 0; c < n_cls; ++c) t.de[c] = (pe[c] - (c == label ? 1.0 : 0.0)) * inv_n;
    for (int c = 0; c < n_cls; ++c) {
        t.dyf[c] = gf * t.de[c];
        t.dys[c] = gs * t.de[c];
    }
    if (gate_path) {
        double dgf = 0.0, dgs = 0.0;
        for (int c = 0; c < n_cls; ++c) {
            dgf += t.de[c] * yf[c];
            dgs += t.de[c] * ys[c];
        }
        const double da = gf * gs * (dgf - dgs);  // d/d(z_f / T)
        t.dz[f] += da / temp;
        t.dz[sec] -= da / temp;
    }

    // Orthogonality on the selected experts' logit vectors.
    if (ortho_scale > 0.0) {
        double d = 0.0, ni = 0.0, nj = 0.0;
        for (int c = 0; c < n_cls; ++c) {
            d += yf[c] * ys[c];
            ni += yf[c] * yf[c];
            nj += ys[c] * ys[c];
        }
        if (ni > 0.0 && nj > 0.0) {
            const double cross = 2.0 * d / (ni * nj) * ortho_scale;
            const double self_f = 2.0 * d * d / (ni * ni * nj) * ortho_scale;
            const double self_s = 2.0 * d * d / (ni * nj * nj) * ortho_scale;
            for (int c = 0; c < n_cls; ++c) {
                t.dyf[c] += cross * ys[c] - self_f * yf[c];
                t.dys[c] += cross * yf[c] - self_s * ys[c];
            }
        }
    }

    // Expert heads, then pull everything back to the shared feature h.
    std::fill(t.dh.begin(), t.dh.end(), 0.0);
    const ExpertState& ef = model.experts[f];
    const ExpertState& es = model.experts[sec];
    add_outer(gb.g[pidx::head_w(f)].data(), gb.g[pidx::head_b(f)].data(), t.dyf.data(), h, n_cls,
              dm.feature_dim);
    add_outer(gb.g[pidx::head_w(sec)].data(), gb.g[pidx::head_b(sec)].data(), t.dys.data(), h,
              n_cls, dm.feature_dim);
    add_transpose_times(ef.head.W, t.dyf.data(), t.dh.data());
    add_transpose_times(es.head.W, t.dys.data(), t.dh.data());

    // Router backward.
    add_outer(gb.g[pidx::kRt2W].data(), gb.g[pidx::kRt2b].data(), t.dz.data(), q, n_exp,
              dm.router_hidden);
    std::fill(t.dq.begin(), t.dq.end(), 0.0);
    add_transpose_times(model.rt2.W, t.dz.data(), t.dq.data());
    for (int j = 0; j < dm.router_hidden; ++j) t.dp[j] = t.dq[j] * (1.0 - q[j] * q[j]);
    add_outer(gb.g[pidx::kRt1W].data(), gb.g[pidx::kRt1b].data(), t.dp.data(), h, dm.router_hidden,
              dm.feature_dim);
    add_transpose_times(model.rt1.W, t.dp.data(), t.dh.data());

    // Encoder backward.
    for (int j = 0; j < dm.feature_dim; ++j) t.dv[j] = t.dh[j] * (1.0 - h[j] * h[j]);
    add_outer(gb.g[pidx::kEnc2W].data(), gb.g[pidx::kEnc2b].data(), t.dv.data(), h1,
              dm.feature_dim, dm.feature_dim);
    std::fill(t.dh1.begin(), t.dh1.end(), 0.0);
    add_transpose_times(model.enc2.W, t.dv.data(), t.dh1.data());
    for (int j = 0; j < dm.feature_dim; ++j) t.du[j] = t.dh1[j] * (1.0 - h1[j] * h1[j]);
    add_outer(gb.g[pidx::kEnc1W].data(), gb.g[pidx::kEnc1b].data(), t.du.data(), x,
              dm.feature_dim, dm.n_features);
}

}  // namespace

LossBreakdown batch_backward(const MoeModel& model, const LabeledBatch& batch,
                             const BatchWorkspace& ws, const LossContext& ctx, GradBuffer* grads,
                             bool parallel) {
    const Dims& dm = model.dims;
    const int n_exp = model.n_experts();
    const int n_cls = dm.n_classes;
    const int n = ws.n;
    const HyperParams& hp = *ctx.hp;
    const double temp = ctx.temp;

    // Batch-level importance and top-2 counts, in sample order.
    std::vector<double> importance(n_exp, 0.0);
    std::vector<int> counts(n_exp, 0);
    for (int i = 0; i < n; ++i) {
        const double* s = ws.dist.row(i);
        for (int k = 0; k < n_exp; ++k) importance[k] += s[k];
        ++counts[ws.first[i]];
        ++counts[ws.second[i]];
    }
    for (int k = 0; k < n_exp; ++k) importance[k] /= n;

    LossBreakdown out;
    const double ln_n = std::log(static_cast<double>(n_exp));

    // Balance components.
    double kl = ln_n;
    for (int k = 0; k < n_exp; ++k)
        if (importance[k] > 0.0) kl += importance[k] * std::log(importance[k]);
    double cmean = 0.0;
    for (int k = 0; k < n_exp; ++k) cmean += counts[k];
    cmean /= n_exp;
    double cvar = 0.0;
    for (int k = 0; k < n_exp; ++k) {
        const double d = counts[k] - cmean;
        cvar += d * d;
    }
    cvar /= n_exp;
    out.balance_kl = kl;
    out.balance_var = cmean > 0.0 ? cvar / (cmean * cmean) : 0.0;
    out.balance_raw =
        2.0 * ctx.balance_kl_frac * out.balance_kl + 2.0 * (1.0 - ctx.balance_kl_frac) * out.balance_var;

    // Per-sample scalar terms.
    double task_sum = 0.0, ent_sum = 0.0, oracle_sum = 0.0, ortho_sum = 0.0;
    int n_ortho = 0;
    for (int i = 0; i < n; ++i) {
        const double* z = ws.logits.row(i);
        const double* s = ws.dist.row(i);
        const double* en = ws.ensemble.row(i);
        const double lse_z = log_sum_exp_temp(z, n_exp, temp);
        const double lse_e = log_sum_exp_temp(en, n_cls, 1.0);
        task_sum += lse_e - en[batch.labels[i]];
        double ent = 0.0;
        for (int k = 0; k < n_exp; ++k)
            if (s[k] > 0.0) ent -= s[k] * (z[k] / temp - lse_z);
        ent_sum += ent;
        if (ctx.oracle_assignment) {
            const int teacher = (*ctx.oracle_assignment)[batch.labels[i]];
            oracle_sum += lse_z - z[teacher] / temp;
        }
        const double* yf = ws.y_first.row(i);
        const double* ys = ws.y_second.row(i);
        double d = 0.0, ni = 0.0, nj = 0.0;
        for (int c = 0; c < n_cls; ++c) {
            d += yf[c] * ys[c];
            ni += yf[c] * yf[c];
            nj += ys[c] * ys[c];
        }
        if (ni > 0.0 && nj > 0.0) {
            ortho_sum += d * d / (ni * nj);
            ++n_ortho;
        } else {
            ++out.ortho_degenerate;
        }
    }
    out.task = task_sum / n;
    out.entropy_raw = ent_sum / (n * ln_n);
    out.oracle_raw = oracle_sum / n;
    out.ortho_raw = n_ortho > 0 ? ortho_sum / n_ortho : 0.0;
    out.entropy_term = -hp.h * out.entropy_raw;
    out.balance_term = hp.b * out.balance_raw;
    out.oracle_term = hp.o * out.oracle_raw;
    out.ortho_term = hp.ortho * out.ortho_raw;
    out.total = out.task + out.entropy_term + out.balance_term + out.oracle_term + out.ortho_term;

    if (!grads) return out;

    std::vector<double> kappa(n_exp, 0.0);
    for (int k = 0; k < n_exp; ++k)
        if (importance[k] > 0.0) kappa[k] = std::log(importance[k]) + 1.0;
    const double ortho_scale = (hp.ortho > 0.0 && n_ortho > 0) ? hp.ortho / n_ortho : 0.0;

    const int n_blocks = (n + kGradBlock - 1) / kGradBlock;
    std::vector<GradBuffer> block_bufs;
    block_bufs.reserve(n_blocks);
    for (int b = 0; b < n_blocks; ++b) block_bufs.push_back(GradBuffer::like(model));

    auto run_block = [&](int b) {
        Scratch scratch(dm, n_exp);
        const int lo = b * kGradBlock;
        const int hi = std::min(n, lo + kGradBlock);
        for (int i = lo; i < hi; ++i)
            backward_one(model, batch, ws, ctx, i, kappa, ortho_scale, block_bufs[b], scratch);
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        for (int b = 0; b < n_blocks; ++b) run_block(b);
    }

    grads->zero();
    for (int b = 0; b < n_blocks; ++b) grads->add(block_bufs[b]);
    return out;
}

}  // namespace moeeco
