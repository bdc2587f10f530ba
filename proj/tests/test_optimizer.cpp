#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "moeeco/optimizer.hpp"

using namespace moeeco;

namespace {

MoeModel tiny_model(std::uint64_t seed = 1) {
    Dims d;
    d.n_features = 2;
    d.feature_dim = 3;
    d.router_hidden = 2;
    d.n_classes = 2;
    return init_model(TierConfig{{2}}, d, seed);
}

}  // namespace

TEST_CASE("zero gradient and zero decay leave parameters unchanged") {
    MoeModel m = tiny_model();
    const std::vector<double> before = m.enc1.W.a;
    AdamW opt;
    opt.init(m);
    const GradBuffer zeros = GradBuffer::like(m);
    opt.step(m, zeros, {0.1, 0.1}, 0.0);
    CHECK(m.enc1.W.a == before);
}

TEST_CASE("decay-only step scales parameters by (1 - lr*wd)") {
    MoeModel m = tiny_model();
    const std::vector<double> before = m.enc1.W.a;
    AdamW opt;
    opt.init(m);
    const GradBuffer zeros = GradBuffer::like(m);
    const double lr = 0.05, wd = 0.2;
    opt.step(m, zeros, {lr, lr}, wd);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(m.enc1.W.a[i] == doctest::Approx(before[i] * (1.0 - lr * wd)).epsilon(1e-15));
}

TEST_CASE("single-step update matches the hand-computed scalar rule") {
    MoeModel m = tiny_model();
    m.enc1.W.a[0] = 1.0;
    AdamW opt;
    opt.init(m);
    GradBuffer grads = GradBuffer::like(m);
    const double g = 0.5, lr = 0.1;
    grads.g[pidx::kEnc1W][0] = g;
    opt.step(m, grads, {lr, lr}, 0.0);

    // Hand oracle: m1 = 0.1*g/bc1 = g; v = 0.001*g^2/bc2 = g^2;
    // update = g / (|g| + eps).
    const double m_hat = (0.1 * g) / (1.0 - 0.9);
    const double v_hat = (0.001 * g * g) / (1.0 - 0.999);
    const double expected = 1.0 - lr * m_hat / (std::sqrt(v_hat) + 1e-8);
    CHECK(m.enc1.W.a[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("two steps keep moments and bias correction consistent") {
    MoeModel m = tiny_model();
    m.enc1.W.a[0] = 0.7;
    AdamW opt;
    opt.init(m);
    GradBuffer grads = GradBuffer::like(m);
    const double lr = 0.01;
    double w = 0.7, m1 = 0.0, v1 = 0.0;
    for (int t = 1; t <= 2; ++t) {
        const double g = t == 1 ? 0.3 : -0.2;
        grads.g[pidx::kEnc1W][0] = g;
        opt.step(m, grads, {lr, lr}, 0.0);
        m1 = 0.9 * m1 + 0.1 * g;
        v1 = 0.999 * v1 + 0.001 * g * g;
        const double mh = m1 / (1.0 - std::pow(0.9, t));
        const double vh = v1 / (1.0 - std::pow(0.999, t));
        w -= lr * mh / (std::sqrt(vh) + 1e-8);
        CHECK(m.enc1.W.a[0] == doctest::Approx(w).epsilon(1e-12));
    }
    CHECK(opt.step_count() == 2);
}

TEST_CASE("per-group learning rates hit the right blocks") {
    MoeModel m = tiny_model();
    AdamW opt;
    opt.init(m);
    GradBuffer grads = GradBuffer::like(m);
    grads.g[pidx::kEnc1W][0] = 1.0;  // group 0
    grads.g[pidx::kRt1W][0] = 1.0;   // group 1
    const double w_enc = m.enc1.W.a[0], w_rt = m.rt1.W.a[0];
    opt.step(m, grads, {1e-3, 1e-1}, 0.0);
    const double d_enc = std::abs(m.enc1.W.a[0] - w_enc);
    const double d_rt = std::abs(m.rt1.W.a[0] - w_rt);
    CHECK(d_rt > 50.0 * d_enc);
}

TEST_CASE("cosine schedule starts at 1, ends at exactly 0, non-increasing") {
    const std::uint64_t total = 137;
    CHECK(cosine_lr_scale(0, total) == 1.0);
    CHECK(std::abs(cosine_lr_scale(total - 1, total)) <= 1e-12);
    double prev = 2.0;
    for (std::uint64_t k = 0; k < total; ++k) {
        const double s = cosine_lr_scale(k, total);
        CHECK(s <= prev);
        CHECK(s >= 0.0);
        prev = s;
    }
    CHECK(cosine_lr_scale(0, 1) == 1.0);
}
