#pragma once

#include <cstdint>
#include <vector>

#include "moeeco/kernels.hpp"
#include "moeeco/model.hpp"

namespace moeeco {

// AdamW with decoupled weight decay: the decay p -= lr*wd*p is applied
// before the adaptive step. Moments are stored per parameter block in
// registry order; one shared step counter drives bias correction.
class AdamW {
   public:
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void init(MoeModel& model);

    // lr_by_group[g] is the already-scheduled learning rate of group g.
    void step(MoeModel& model, const GradBuffer& grads, const std::vector<double>& lr_by_group,
              double weight_decay);

    std::uint64_t step_count() const { return t_; }
    std::vector<std::vector<double>>& moment1() { return m_; }
    std::vector<std::vector<double>>& moment2() { return v_; }
    void set_step_count(std::uint64_t t) { t_ = t; }

   private:
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Cosine decay from 1 at step 0 to exactly 0 at the final step.
double cosine_lr_scale(std::uint64_t step, std::uint64_t total_steps);

}  // namespace moeeco
