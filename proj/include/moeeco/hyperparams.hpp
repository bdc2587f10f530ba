#pragma once

#include <functional>
#include <string>

namespace moeeco {

// The four control weights plus the temperature/warmup schedules. E, the
// router's exploration budget, is T*H/(O+B): temperature and entropy reward
// push exploration, oracle supervision and balance pressure push
// exploitation.
struct HyperParams {
    double t_init = 3.0;    // routing temperature at the start of annealing
    double t_end = 0.3;     // final temperature
    double h = 0.10;        // routing entropy reward weight
    double o = 0.15;        // oracle supervision weight
    double b = 0.40;        // balance loss weight
    double ortho = 0.0;     // orthogonality loss weight
    int anneal_epochs = 30; // cosine annealing span
    int warmup_epochs = 15; // random-routing epochs

    void validate() const;  // throws InvalidConfig
};

enum class PhaseLabel {
    Healthy,             // E >= 0.5
    ReversibleSubHealth, // 0.2 < E < 0.5
    IrreversibleCollapse // E <= 0.2
};

const char* to_string(PhaseLabel label);

// E = T * H / (O + B). Throws ZeroDenominator when O + B == 0.
double compute_E(const HyperParams& hp, double t_current);

using ComplexityFn = std::function<double(double)>;

// Named task-complexity functions: "one" (default), "log", "sqrt".
ComplexityFn complexity_fn_from_name(const std::string& name);

// E_eff = E / f(n_classes). Throws NonPositiveComplexity when f(C) <= 0.
double compute_E_eff(const HyperParams& hp, double t_current, int n_classes, const ComplexityFn& f);

// Fixed reporting thresholds: 0.5 inclusive-healthy, 0.2 inclusive-collapse.
PhaseLabel classify_phase(double e);

// T_init during warmup, cosine from T_init to T_end across anneal_epochs,
// then T_end.
double temperature_at(const HyperParams& hp, int epoch);

}  // namespace moeeco
