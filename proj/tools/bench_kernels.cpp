// Compares the serial reference against the OpenMP kernels on a synthetic
// workload: forward-only and fused forward+backward, wall time per pass.

#include <omp.h>

#include <cstdio>
#include <cstdlib>

#include "moeeco/data.hpp"
#include "moeeco/losses.hpp"
#include "moeeco/reference.hpp"

using namespace moeeco;

int main(int argc, char** argv) {
    const int batch = argc > 1 ? std::atoi(argv[1]) : 4096;
    const int reps = argc > 2 ? std::atoi(argv[2]) : 10;

    DatasetSpec spec;
    spec.n_classes = 16;
    spec.n_features = 32;
    spec.samples_per_class = (batch + 15) / 16;
    spec.seed = 42;
    const Dataset data = generate(spec);
    LabeledBatch work = data.train;
    work.n = batch;
    work.features.resize(static_cast<std::size_t>(batch) * spec.n_features);
    work.labels.resize(batch);

    Dims dims;
    dims.n_features = spec.n_features;
    dims.feature_dim = 64;
    dims.router_hidden = 32;
    dims.n_classes = spec.n_classes;
    MoeModel model = init_model(TierConfig{{8, 4, 4}}, dims, 7);

    HyperParams hp;
    hp.ortho = 0.05;
    const std::vector<int> assignment = round_robin_assignment(spec.n_classes, model.n_experts());
    const Prng rng(1, Stream::Routing);
    GradBuffer grads = GradBuffer::like(model);

    std::printf("batch=%d reps=%d omp_max_threads=%d\n", batch, reps, omp_get_max_threads());

    auto time_loss = [&](bool use_ref, bool with_grads) {
        double best = 1e300;
        for (int r = 0; r < reps; ++r) {
            const double t0 = omp_get_wtime();
            LossBreakdown bd;
            if (use_ref)
                bd = ref::total_loss(model, work, hp, 1.0, assignment, RoutingMode::Learned, rng,
                                     with_grads ? &grads : nullptr);
            else
                bd = total_loss(model, work, hp, 1.0, assignment, RoutingMode::Learned, rng,
                                with_grads ? &grads : nullptr, 0.5, /*parallel=*/true);
            const double dt = omp_get_wtime() - t0;
            if (dt < best) best = dt;
            if (r == 0 && with_grads)
                std::printf("  [%s] total=%.6f\n", use_ref ? "ref" : "omp", bd.total);
        }
        return best;
    };

    const double ref_fwd = time_loss(true, false);
    const double omp_fwd = time_loss(false, false);
    const double ref_full = time_loss(true, true);
    const double omp_full = time_loss(false, true);

    std::printf("forward only : ref %8.3f ms | omp %8.3f ms | speedup %.2fx\n", 1e3 * ref_fwd,
                1e3 * omp_fwd, ref_fwd / omp_fwd);
    std::printf("fwd+backward : ref %8.3f ms | omp %8.3f ms | speedup %.2fx\n", 1e3 * ref_full,
                1e3 * omp_full, ref_full / omp_full);
    return 0;
}
