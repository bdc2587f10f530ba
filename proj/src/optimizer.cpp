#include "moeeco/optimizer.hpp"

#include <cmath>

#include "moeeco/errors.hpp"

namespace moeeco {

void AdamW::init(MoeModel& model) {
    m_.clear();
    v_.clear();
    t_ = 0;
    for (const auto& p : model.params()) {
        m_.emplace_back(p.data->size(), 0.0);
        v_.emplace_back(p.data->size(), 0.0);
    }
}

void AdamW::step(MoeModel& model, const GradBuffer& grads, const std::vector<double>& lr_by_group,
                 double weight_decay) {
    auto params = model.params();
    if (m_.size() != params.size()) throw InvalidConfig("optimizer not initialized for this model");

    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));

    for (std::size_t b = 0; b < params.size(); ++b) {
        std::vector<double>& w = *params[b].data;
        const std::vector<double>& g = grads.g[b];
        std::vector<double>& m = m_[b];
        std::vector<double>& v = v_[b];
        const double lr = lr_by_group[params[b].group];
        const double decay = lr * weight_decay;
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] -= decay * w[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

double cosine_lr_scale(std::uint64_t step, std::uint64_t total_steps) {
    if (total_steps <= 1) return step == 0 ? 1.0 : 0.0;
    const double s = static_cast<double>(step) / static_cast<double>(total_steps - 1);
    return 0.5 * (1.0 + std::cos(M_PI * s));
}

}  // namespace moeeco
