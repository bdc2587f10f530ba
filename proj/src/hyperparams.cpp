#include "moeeco/hyperparams.hpp"

#include <cmath>

#include "moeeco/errors.hpp"

namespace moeeco {

void HyperParams::validate() const {
    if (!(t_init > 0.0) || !(t_end > 0.0)) throw InvalidConfig("temperatures must be > 0");
    if (t_init < t_end) throw InvalidConfig("t_init must be >= t_end");
    if (h < 0.0 || o < 0.0 || b < 0.0 || ortho < 0.0)
        throw InvalidConfig("loss weights must be >= 0");
    if (anneal_epochs < 1) throw InvalidConfig("anneal_epochs must be >= 1");
    if (warmup_epochs < 0) throw InvalidConfig("warmup_epochs must be >= 0");
}

const char* to_string(PhaseLabel label) {
    switch (label) {
        case PhaseLabel::Healthy: return "Healthy";
        case PhaseLabel::ReversibleSubHealth: return "ReversibleSubHealth";
        case PhaseLabel::IrreversibleCollapse: return "IrreversibleCollapse";
    }
    return "?";
}

double compute_E(const HyperParams& hp, double t_current) {
    const double denom = hp.o + hp.b;
    if (denom <= 0.0) throw ZeroDenominator("O + B must be > 0 to compute E");
    return t_current * hp.h / denom;
}

ComplexityFn complexity_fn_from_name(const std::string& name) {
    if (name == "one") return [](double) { return 1.0; };
    if (name == "log") return [](double c) { return std::log(c); };
    if (name == "sqrt") return [](double c) { return std::sqrt(c); };
    throw InvalidConfig("unknown complexity function '" + name + "' (want one|log|sqrt)");
}

double compute_E_eff(const HyperParams& hp, double t_current, int n_classes, const ComplexityFn& f) {
    const double fc = f(static_cast<double>(n_classes));
    if (!(fc > 0.0)) throw NonPositiveComplexity("f(C) must be > 0");
    return compute_E(hp, t_current) / fc;
}

PhaseLabel classify_phase(double e) {
    if (e >= 0.5) return PhaseLabel::Healthy;
    if (e > 0.2) return PhaseLabel::ReversibleSubHealth;
    return PhaseLabel::IrreversibleCollapse;
}

double temperature_at(const HyperParams& hp, int epoch) {
    if (epoch < hp.warmup_epochs) return hp.t_init;
    const int k = epoch - hp.warmup_epochs;
    if (k >= hp.anneal_epochs) return hp.t_end;
    const double s = static_cast<double>(k) / static_cast<double>(hp.anneal_epochs);
    return hp.t_end + 0.5 * (hp.t_init - hp.t_end) * (1.0 + std::cos(M_PI * s));
}

}  // namespace moeeco
