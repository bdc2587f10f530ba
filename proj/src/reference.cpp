#include "moeeco/reference.hpp"

#include <cmath>

#include "moeeco/data.hpp"
#include "moeeco/errors.hpp"

namespace moeeco::ref {

namespace {

std::vector<double> matvec(const Matrix& W, const Vector& b, const std::vector<double>& x) {
    std::vector<double> y(W.rows);
    for (int r = 0; r < W.rows; ++r) {
        double acc = b[r];
        for (int c = 0; c < W.cols; ++c) acc += W.at(r, c) * x[c];
        y[r] = acc;
    }
    return y;
}

std::vector<double> tanh_of(std::vector<double> v) {
    for (double& x : v) x = std::tanh(x);
    return v;
}

std::vector<double> softmax_of(const std::vector<double>& z, double temp) {
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    std::vector<double> out(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp((z[i] - m) / temp);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

struct SampleState {
    std::vector<double> x, h1, h, q, z, s, yf, ys, ens, pe;
    int first = 0, second = 0;
    double gf = 0.0, gs = 0.0;
};

}  // namespace

LossBreakdown total_loss(const MoeModel& model, const LabeledBatch& batch, const HyperParams& hp,
                         double temp, const std::vector<int>& assignment, RoutingMode mode,
                         const Prng& rng, GradBuffer* grads, double balance_kl_frac) {
    if (batch.n == 0) throw InvalidSpec("total_loss needs a non-empty batch");
    const int n = batch.n;
    const int n_exp = model.n_experts();
    const int n_cls = model.dims.n_classes;
    const double ln_n = std::log(static_cast<double>(n_exp));

    std::vector<SampleState> st(n);
    for (int i = 0; i < n; ++i) {
        SampleState& s = st[i];
        s.x.assign(batch.row(i), batch.row(i) + batch.n_features);
        s.h1 = tanh_of(matvec(model.enc1.W, model.enc1.b, s.x));
        s.h = tanh_of(matvec(model.enc2.W, model.enc2.b, s.h1));
        s.q = tanh_of(matvec(model.rt1.W, model.rt1.b, s.h));
        s.z = matvec(model.rt2.W, model.rt2.b, s.q);
        s.s = softmax_of(s.z, temp);
        if (mode == RoutingMode::RandomWarmup) {
            Prng draw = rng.split(static_cast<std::uint64_t>(i));
            s.first = static_cast<int>(draw.next_below(n_exp));
            int b = static_cast<int>(draw.next_below(n_exp - 1));
            if (b >= s.first) ++b;
            s.second = b;
            s.gf = s.gs = 0.5;
        } else {
            s.first = 0;
            for (int k = 1; k < n_exp; ++k)
                if (s.z[k] > s.z[s.first]) s.first = k;
            s.second = s.first == 0 ? 1 : 0;
            for (int k = 0; k < n_exp; ++k)
                if (k != s.first && s.z[k] > s.z[s.second]) s.second = k;
            const std::vector<double> g =
                softmax_of({s.z[s.first] / temp, s.z[s.second] / temp}, 1.0);
            s.gf = g[0];
            s.gs = g[1];
        }
        s.yf = matvec(model.experts[s.first].head.W, model.experts[s.first].head.b, s.h);
        s.ys = matvec(model.experts[s.second].head.W, model.experts[s.second].head.b, s.h);
        s.ens.resize(n_cls);
        for (int c = 0; c < n_cls; ++c) s.ens[c] = s.gf * s.yf[c] + s.gs * s.ys[c];
        s.pe = softmax_of(s.ens, 1.0);
    }

    std::vector<double> importance(n_exp, 0.0);
    std::vector<int> counts(n_exp, 0);
    for (const auto& s : st) {
        for (int k = 0; k < n_exp; ++k) importance[k] += s.s[k] / n;
        ++counts[s.first];
        ++counts[s.second];
    }

    LossBreakdown out;
    out.balance_kl = ln_n;
    for (double v : importance)
        if (v > 0.0) out.balance_kl += v * std::log(v);
    double cmean = 2.0 * n / n_exp;
    double cvar = 0.0;
    for (int c : counts) cvar += (c - cmean) * (c - cmean);
    cvar /= n_exp;
    out.balance_var = cvar / (cmean * cmean);
    out.balance_raw = 2.0 * balance_kl_frac * out.balance_kl +
                      2.0 * (1.0 - balance_kl_frac) * out.balance_var;

    int n_ortho = 0;
    std::vector<double> ortho_val(n, 0.0);
    std::vector<bool> ortho_ok(n, false);
    for (int i = 0; i < n; ++i) {
        const SampleState& s = st[i];
        out.task += -std::log(s.pe[batch.labels[i]]) / n;
        double ent = 0.0;
        for (double p : s.s)
            if (p > 0.0) ent -= p * std::log(p);
        out.entropy_raw += ent / (n * ln_n);
        out.oracle_raw += -std::log(std::max(s.s[assignment[batch.labels[i]]], 5e-324)) / n;
        double d = 0.0, ni = 0.0, nj = 0.0;
        for (int c = 0; c < n_cls; ++c) {
            d += s.yf[c] * s.ys[c];
            ni += s.yf[c] * s.yf[c];
            nj += s.ys[c] * s.ys[c];
        }
        if (ni > 0.0 && nj > 0.0) {
            ortho_val[i] = d * d / (ni * nj);
            ortho_ok[i] = true;
            ++n_ortho;
        } else {
            ++out.ortho_degenerate;
        }
    }
    for (int i = 0; i < n; ++i)
        if (ortho_ok[i]) out.ortho_raw += ortho_val[i] / n_ortho;
    out.entropy_term = -hp.h * out.entropy_raw;
    out.balance_term = hp.b * out.balance_raw;
    out.oracle_term = hp.o * out.oracle_raw;
    out.ortho_term = hp.ortho * out.ortho_raw;
    out.total = out.task + out.entropy_term + out.balance_term + out.oracle_term + out.ortho_term;

    if (!grads) return out;
    grads->zero();

    std::vector<double> kappa(n_exp, 0.0);
    for (int k = 0; k < n_exp; ++k)
        if (importance[k] > 0.0) kappa[k] = std::log(importance[k]) + 1.0;

    for (int i = 0; i < n; ++i) {
        const SampleState& s = st[i];
        const int label = batch.labels[i];

        std::vector<double> dz(n_exp, 0.0);
        if (hp.h > 0.0) {
            double ent = 0.0;
            for (double p : s.s)
                if (p > 0.0) ent -= p * std::log(p);
            const double ch = -hp.h / (ln_n * n);
            for (int k = 0; k < n_exp; ++k)
                if (s.s[k] > 0.0) dz[k] += ch / temp * s.s[k] * (-std::log(s.s[k]) - ent);
        }
        if (hp.o > 0.0) {
            const int teacher = assignment[label];
            for (int k = 0; k < n_exp; ++k)
                dz[k] += hp.o / (n * temp) * (s.s[k] - (k == teacher ? 1.0 : 0.0));
        }
        if (hp.b > 0.0) {
            double cdot = 0.0;
            for (int k = 0; k < n_exp; ++k) cdot += s.s[k] * kappa[k];
            const double cb = hp.b * 2.0 * balance_kl_frac / n;
            for (int k = 0; k < n_exp; ++k)
                if (s.s[k] > 0.0) dz[k] += cb / temp * s.s[k] * (kappa[k] - cdot);
        }

        std::vector<double> de(n_cls), dyf(n_cls), dys(n_cls);
        for (int c = 0; c < n_cls; ++c) de[c] = (s.pe[c] - (c == label ? 1.0 : 0.0)) / n;
        for (int c = 0; c < n_cls; ++c) {
            dyf[c] = s.gf * de[c];
            dys[c] = s.gs * de[c];
        }
        if (mode != RoutingMode::RandomWarmup) {
            double dgf = 0.0, dgs = 0.0;
            for (int c = 0; c < n_cls; ++c) {
                dgf += de[c] * s.yf[c];
                dgs += de[c] * s.ys[c];
            }
            const double da = s.gf * s.gs * (dgf - dgs);
            dz[s.first] += da / temp;
            dz[s.second] -= da / temp;
        }
        if (hp.ortho > 0.0 && ortho_ok[i]) {
            double d = 0.0, ni = 0.0, nj = 0.0;
            for (int c = 0; c < n_cls; ++c) {
                d += s.yf[c] * s.ys[c];
                ni += s.yf[c] * s.yf[c];
                nj += s.ys[c] * s.ys[c];
            }
            const double w = hp.ortho / n_ortho;
            for (int c = 0; c < n_cls; ++c) {
                dyf[c] += w * (2.0 * d / (ni * nj) * s.ys[c] - 2.0 * d * d / (ni * ni * nj) * s.yf[c]);
                dys[c] += w * (2.0 * d / (ni * nj) * s.yf[c] - 2.0 * d * d / (ni * nj * nj) * s.ys[c]);
            }
        }

        std::vector<double> dh(model.dims.feature_dim, 0.0);
        auto head_back = [&](int expert, const std::vector<double>& dy) {
            auto& gw = grads->g[pidx::head_w(expert)];
            auto& gb = grads->g[pidx::head_b(expert)];
            const Matrix& W = model.experts[expert].head.W;
            for (int r = 0; r < n_cls; ++r) {
                for (int c = 0; c < W.cols; ++c) {
                    gw[static_cast<std::size_t>(r) * W.cols + c] += dy[r] * s.h[c];
                    dh[c] += W.at(r, c) * dy[r];
                }
                gb[r] += dy[r];
            }
        };
        head_back(s.first, dyf);
        head_back(s.second, dys);

        std::vector<double> dq(model.dims.router_hidden, 0.0);
        for (int r = 0; r < n_exp; ++r) {
            for (int c = 0; c < model.dims.router_hidden; ++c) {
                grads->g[pidx::kRt2W][static_cast<std::size_t>(r) * model.dims.router_hidden + c] +=
                    dz[r] * s.q[c];
                dq[c] += model.rt2.W.at(r, c) * dz[r];
            }
            grads->g[pidx::kRt2b][r] += dz[r];
        }
        std::vector<double> dp(model.dims.router_hidden);
        for (int j = 0; j < model.dims.router_hidden; ++j) dp[j] = dq[j] * (1.0 - s.q[j] * s.q[j]);
        for (int r = 0; r < model.dims.router_hidden; ++r) {
            for (int c = 0; c < model.dims.feature_dim; ++c) {
                grads->g[pidx::kRt1W][static_cast<std::size_t>(r) * model.dims.feature_dim + c] +=
                    dp[r] * s.h[c];
                dh[c] += model.rt1.W.at(r, c) * dp[r];
            }
            grads->g[pidx::kRt1b][r] += dp[r];
        }

        std::vector<double> dv(model.dims.feature_dim), dh1(model.dims.feature_dim, 0.0);
        for (int j = 0; j < model.dims.feature_dim; ++j) dv[j] = dh[j] * (1.0 - s.h[j] * s.h[j]);
        for (int r = 0; r < model.dims.feature_dim; ++r) {
            for (int c = 0; c < model.dims.feature_dim; ++c) {
                grads->g[pidx::kEnc2W][static_cast<std::size_t>(r) * model.dims.feature_dim + c] +=
                    dv[r] * s.h1[c];
                dh1[c] += model.enc2.W.at(r, c) * dv[r];
            }
            grads->g[pidx::kEnc2b][r] += dv[r];
        }
        std::vector<double> du(model.dims.feature_dim);
        for (int j = 0; j < model.dims.feature_dim; ++j) du[j] = dh1[j] * (1.0 - s.h1[j] * s.h1[j]);
        for (int r = 0; r < model.dims.feature_dim; ++r) {
            for (int c = 0; c < model.dims.n_features; ++c)
                grads->g[pidx::kEnc1W][static_cast<std::size_t>(r) * model.dims.n_features + c] +=
                    du[r] * s.x[c];
            grads->g[pidx::kEnc1b][r] += du[r];
        }
    }
    return out;
}

}  // namespace moeeco::ref
