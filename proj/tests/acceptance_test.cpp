// Acceptance suite: every criterion prints one pass/fail line; the process
// exits with the number of failed criteria.

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "moeeco/checkpoint.hpp"
#include "moeeco/config.hpp"
#include "moeeco/data.hpp"
#include "moeeco/ecology.hpp"
#include "moeeco/losses.hpp"
#include "moeeco/metrics.hpp"
#include "moeeco/trainer.hpp"

namespace fs = std::filesystem;
using namespace moeeco;

namespace {

int g_failures = 0;

void report(int number, const char* name, bool ok, double seconds, const std::string& detail) {
    std::printf("[%s] criterion %d (%s) %.2fs%s%s\n", ok ? "PASS" : "FAIL", number, name, seconds,
                detail.empty() ? "" : ": ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

LabeledBatch random_batch(int n, int d, int n_classes, std::uint64_t seed) {
    LabeledBatch b;
    b.n = n;
    b.n_features = d;
    b.features.resize(static_cast<std::size_t>(n) * d);
    b.labels.resize(n);
    Prng rng(seed, Stream::Data);
    for (double& v : b.features) v = rng.next_gaussian();
    for (int i = 0; i < n; ++i) b.labels[i] = static_cast<int>(rng.next_below(n_classes));
    return b;
}

// ---------------------------------------------------------------- 1
// Gradient oracle: analytic gradients vs central finite differences on a
// (n_features=3, feature_dim=4, N=4, C=3) model, batch 5, 20 seeds, four
// weight settings, rel err <= 1e-4 with abs floor 1e-8.
void criterion1() {
    const double t0 = omp_get_wtime();
    Dims dims;
    dims.n_features = 3;
    dims.feature_dim = 4;
    dims.router_hidden = 4;
    dims.n_classes = 3;
    const auto assignment = round_robin_assignment(3, 4);

    std::vector<HyperParams> settings(4);
    for (HyperParams& hp : settings) hp.h = hp.o = hp.b = hp.ortho = 0.0;
    settings[1].h = 0.25;
    settings[2].b = 0.6;
    settings[3].o = 0.4;
    settings[3].ortho = 0.15;

    double worst = 0.0;
    std::string worst_at;
    for (int setting = 0; setting < 4; ++setting) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            MoeModel m = init_model(TierConfig{{2, 2}}, dims, seed);
            const LabeledBatch batch = random_batch(5, 3, 3, seed + 1000);
            const HyperParams& hp = settings[setting];
            const double temp = 1.1;

            BatchWorkspace ws;
            Prng unused;
            batch_forward(m, batch, temp, RoutingMode::Learned, unused, ws, false);
            const std::vector<int> first = ws.first, second = ws.second;
            LossContext ctx;
            ctx.hp = &hp;
            ctx.temp = temp;
            ctx.oracle_assignment = &assignment;
            ctx.mode = RoutingMode::Learned;
            GradBuffer grads = GradBuffer::like(m);
            batch_backward(m, batch, ws, ctx, &grads, false);

            auto pinned_value = [&]() {
                BatchWorkspace w2;
                batch_forward(m, batch, temp, RoutingMode::Pinned, unused, w2, false,
                              first.data(), second.data());
                LossContext c2 = ctx;
                c2.mode = RoutingMode::Pinned;
                return batch_backward(m, batch, w2, c2, nullptr, false).total;
            };
            const double step = 1e-5;
            auto params = m.params();
            for (std::size_t b = 0; b < params.size(); ++b) {
                std::vector<double>& w = *params[b].data;
                for (std::size_t i = 0; i < w.size(); ++i) {
                    const double saved = w[i];
                    w[i] = saved + step;
                    const double up = pinned_value();
                    w[i] = saved - step;
                    const double down = pinned_value();
                    w[i] = saved;
                    const double fd = (up - down) / (2.0 * step);
                    const double a = grads.g[b][i];
                    const double rel =
                        std::abs(a - fd) / std::max({1e-8, std::abs(a), std::abs(fd)});
                    if (rel > worst) {
                        worst = rel;
                        worst_at = params[b].name + " setting " + std::to_string(setting);
                    }
                }
            }
        }
    }
    const double dt = omp_get_wtime() - t0;
    char detail[160];
    std::snprintf(detail, sizeof(detail), "worst rel err %.3g (%s)", worst, worst_at.c_str());
    report(1, "gradient oracle", worst <= 1e-4 && dt < 10.0, dt, detail);
}

// ---------------------------------------------------------------- 2
// Taxonomy oracle: brute-force interval table on a 200x200 grid.
ExpertCategory table_classify(double u, double a) {
    struct Rule {
        double u_lo, u_hi, a_lo, a_hi;
        ExpertCategory cat;
    };
    static const Rule rules[] = {
        {0.00, 0.01, 0.00, 1.01, ExpertCategory::Dead},
        {0.01, 0.03, 0.25, 1.01, ExpertCategory::Edge},
        {0.01, 0.03, 0.00, 0.25, ExpertCategory::Noise},
        {0.03, 1.01, 0.50, 1.01, ExpertCategory::PureCore},
        {0.03, 1.01, 0.30, 0.50, ExpertCategory::BroadCore},
        {0.03, 1.01, 0.00, 0.30, ExpertCategory::WeakCore},
    };
    for (const Rule& r : rules)
        if (u >= r.u_lo && u < r.u_hi && a >= r.a_lo && a < r.a_hi) return r.cat;
    return ExpertCategory::Dead;
}

void criterion2() {
    const double t0 = omp_get_wtime();
    int mismatches = 0;
    for (int ui = 0; ui < 200; ++ui)
        for (int ai = 0; ai < 200; ++ai) {
            const double u = ui / 200.0;  // hits 1%, 3% exactly
            const double a = ai / 200.0;  // hits 25%, 30%, 50% exactly
            if (classify_expert(u, a) != table_classify(u, a)) ++mismatches;
        }
    const double dt = omp_get_wtime() - t0;
    report(2, "taxonomy oracle", mismatches == 0 && dt < 1.0, dt,
           std::to_string(mismatches) + " mismatches on 200x200 grid");
}

// ---------------------------------------------------------------- 3
void criterion3() {
    const double t0 = omp_get_wtime();
    HyperParams a;
    a.t_init = 3.0;
    a.h = 0.10;
    a.o = 0.15;
    a.b = 0.40;
    HyperParams b = a;
    b.b = 0.85;
    const double e_a = compute_E(a, 3.0);
    const double e_b = compute_E(b, 3.0);
    const bool ok = std::abs(e_a - 0.545) <= 1e-3 && std::abs(e_b - 0.300) <= 1e-3 &&
                    e_a == 3.0 * 0.10 / (0.15 + 0.40) && e_b == 3.0 * 0.10 / (0.15 + 0.85);
    char detail[96];
    std::snprintf(detail, sizeof(detail), "E=%.6f and E=%.6f", e_a, e_b);
    report(3, "E arithmetic", ok, omp_get_wtime() - t0, detail);
}

// ---------------------------------------------------------------- 4
// Temperature invariance of expert allocation for frozen models.
void criterion4() {
    const double t0 = omp_get_wtime();
    bool ok = true;
    Prng seeder(2024, Stream::Data);
    for (int trial = 0; trial < 10 && ok; ++trial) {
        Dims dims;
        dims.n_features = 6;
        dims.feature_dim = 12;
        dims.router_hidden = 8;
        dims.n_classes = 4;
        const std::vector<std::vector<int>> shapes = {{8, 4, 4}, {4, 4, 4, 4}, {16}};
        const MoeModel m =
            init_model(TierConfig{shapes[trial % shapes.size()]}, dims, seeder.next_u64());
        const LabeledBatch test = random_batch(400, 6, 4, seeder.next_u64());

        std::vector<int> base_first, base_second;
        std::vector<double> base_usage;
        int base_active = -1, base_dead = -1;
        for (double temp : {0.1, 0.3, 0.5, 0.7, 1.0, 2.0, 5.0}) {
            BatchWorkspace ws;
            Prng unused;
            batch_forward(m, test, temp, RoutingMode::Learned, unused, ws, true);
            const EvalResult ev = evaluate(m, test, temp);
            if (base_first.empty()) {
                base_first = ws.first;
                base_second = ws.second;
                base_usage = ev.report.tier_usage;
                base_active = ev.report.active_count;
                base_dead = ev.report.dead_count;
            } else {
                ok = ok && ws.first == base_first && ws.second == base_second &&
                     ev.report.tier_usage == base_usage && ev.report.active_count == base_active &&
                     ev.report.dead_count == base_dead;
            }
        }
    }
    const double dt = omp_get_wtime() - t0;
    report(4, "temperature invariance", ok && dt < 10.0, dt,
           "top-2 ids, tier usage, active and dead counts exactly equal over 7 temperatures");
}

// ---------------------------------------------------------------- 5 & 6
DatasetSpec desk_spec(std::uint64_t seed) {
    DatasetSpec s;
    s.n_classes = 8;
    s.n_features = 16;
    s.samples_per_class = 200;
    s.n_superclasses = 4;
    s.seed = seed;
    return s;
}

Dims desk_dims() {
    Dims d;
    d.n_features = 16;
    d.feature_dim = 64;
    d.router_hidden = 32;
    d.n_classes = 8;
    return d;
}

int final_dead(const RunTrajectory& traj) { return traj.records.back().ecology.dead_count; }

void criterion5() {
    const double t0 = omp_get_wtime();
    int a_zero = 0, b_dead = 0;
    std::string detail_a = "A dead:", detail_b = " B dead:";
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset data = generate(desk_spec(seed));
        TrainConfig tc;
        tc.epochs = 60;
        tc.seed = seed;
        LossOptions lo;
        lo.oracle_assignment = round_robin_assignment(8, 16);

        HyperParams hp_a;  // T=3.0, H=0.10, O=0.15, B=0.40 -> E = 0.545
        MoeModel ma = init_model(TierConfig{{16}}, desk_dims(), seed);
        AdamW oa;
        const RunTrajectory ta = train(ma, data, hp_a, tc, lo, oa);
        const int da = final_dead(ta);
        if (da == 0) ++a_zero;
        detail_a += " " + std::to_string(da);

        HyperParams hp_b = hp_a;  // B=6.0 -> E = 0.3/6.15 = 0.0488
        hp_b.b = 6.0;
        MoeModel mb = init_model(TierConfig{{16}}, desk_dims(), seed);
        AdamW ob;
        const RunTrajectory tb = train(mb, data, hp_b, tc, lo, ob);
        const int db = final_dead(tb);
        if (db >= 1) ++b_dead;
        detail_b += " " + std::to_string(db);
    }
    const double dt = omp_get_wtime() - t0;
    report(5, "desk-scale phase analog", a_zero >= 4 && b_dead >= 3 && dt < 600.0, dt,
           detail_a + " (DEAD=0 in " + std::to_string(a_zero) + "/5)," + detail_b +
               " (DEAD>=1 in " + std::to_string(b_dead) + "/5)");
}

void criterion6() {
    const double t0 = omp_get_wtime();
    std::vector<int> dec_b040, dec_b0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset data = generate(desk_spec(seed + 50));
        for (const double b_weight : {0.40, 0.0}) {
            // Phase 1: collapse toward a 4-expert teacher, fixed T.
            HyperParams hp1;
            hp1.t_init = hp1.t_end = 1.0;
            hp1.anneal_epochs = 1;
            hp1.warmup_epochs = 0;
            hp1.h = 0.10;
            hp1.o = 2.0;
            hp1.b = 0.0;
            LossOptions collapse_lo;
            collapse_lo.oracle_assignment.resize(8);
            for (int c = 0; c < 8; ++c) collapse_lo.oracle_assignment[c] = c % 4;
            TrainConfig tc1;
            tc1.epochs = 20;
            tc1.seed = seed;
            MoeModel m = init_model(TierConfig{{16}}, desk_dims(), seed);
            AdamW opt1;
            const RunTrajectory t1 = train(m, data, hp1, tc1, collapse_lo, opt1);
            const int dead_collapsed = final_dead(t1);

            // Phase 2: oracle off, balance on or off.
            HyperParams hp2 = hp1;
            hp2.o = 0.0;
            hp2.b = b_weight;
            LossOptions lo2;
            lo2.oracle_assignment = round_robin_assignment(8, 16);
            TrainConfig tc2;
            tc2.epochs = 40;
            tc2.seed = seed + 500;
            AdamW opt2;
            const RunTrajectory t2 = train(m, data, hp2, tc2, lo2, opt2);
            const int decrease = dead_collapsed - final_dead(t2);
            (b_weight > 0.0 ? dec_b040 : dec_b0).push_back(decrease);
            if (b_weight > 0.0)
                detail += "s" + std::to_string(seed) + ":" + std::to_string(dead_collapsed) +
                          "->" + std::to_string(final_dead(t2)) + " ";
        }
    }
    auto median = [](std::vector<int> v) {
        std::sort(v.begin(), v.end());
        return static_cast<double>(v[v.size() / 2]);
    };
    int strict = 0;
    for (int d : dec_b040)
        if (d >= 2) ++strict;
    const bool ok = strict >= 3 && median(dec_b0) < median(dec_b040);
    const double dt = omp_get_wtime() - t0;
    char extra[160];
    std::snprintf(extra, sizeof(extra),
                  "B=0.40 decreases>=2 in %d/5, medians %.1f (B=0.40) vs %.1f (B=0)", strict,
                  median(dec_b040), median(dec_b0));
    report(6, "revival analog", ok && dt < 600.0, dt, detail + extra);
}

// ---------------------------------------------------------------- 7
void criterion7() {
    const double t0 = omp_get_wtime();
    const RevivalStats rs =
        revival_stats({4, 12, 8, 7, 7, 7, 5, 5, 4}, {0, 10, 20, 30, 40, 50, 60, 70, 80});
    bool ok = rs.peak_dead == 12 && rs.final_dead == 4 && rs.revived == 8;

    // Nine-epoch window consistent with the reference row: min 47.23,
    // max 48.00, mean 47.66 -> range 0.77.
    const std::vector<double> acc = {47.23, 47.45, 47.58, 47.66, 47.70,
                                     47.75, 47.80, 47.77, 48.00};
    std::vector<StabilityInput> window;
    for (double a : acc) window.push_back({a, {1.0}});
    const StabilityStats st = stability_stats(window);
    ok = ok && std::abs(st.mean - 47.66) < 5e-3 && std::abs(st.range - 0.77) < 5e-3;
    char detail[128];
    std::snprintf(detail, sizeof(detail), "revival (%d,%d,%d), stability mean %.2f range %.2f",
                  rs.peak_dead, rs.final_dead, rs.revived, st.mean, st.range);
    report(7, "revival/stability fixtures", ok, omp_get_wtime() - t0, detail);
}

// ---------------------------------------------------------------- 8
std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int shell(const std::string& cmd) {
    const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

void criterion8() {
    const double t0 = omp_get_wtime();
    const char* cli_env = std::getenv("MOE_CLI");
    if (!cli_env) {
        report(8, "determinism & resume", false, 0.0, "MOE_CLI not set");
        return;
    }
    const std::string cli = cli_env;
    const fs::path dir = fs::temp_directory_path() / ("moeeco_acc8_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "exp.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "experiment.name = acc8\n"
               "data.n_classes = 4\n"
               "data.n_features = 6\n"
               "data.samples_per_class = 30\n"
               "data.n_superclasses = 2\n"
               "model.tier_sizes = 4,4\n"
               "model.feature_dim = 12\n"
               "model.router_hidden = 8\n"
               "routing.warmup_epochs = 2\n"
               "routing.anneal_epochs = 3\n"
               "train.epochs = 6\n"
               "train.batch_size = 32\n"
               "train.eval_every = 1\n"
               "train.checkpoint_every = 2\n";
    }
    bool ok = true;
    std::string detail;
    const std::string out_a = (dir / "a").string(), out_b = (dir / "b").string(),
                      out_c = (dir / "c").string();
    ok = ok && shell(cli + " train --config " + cfg_path.string() + " --out " + out_a) == 0;
    ok = ok && shell(cli + " train --config " + cfg_path.string() + " --out " + out_b) == 0;
    ExperimentConfig cfg;
    cfg.apply_file(cfg_path.string());
    const std::string run_id = cfg.run_id();
    const std::string metrics_a = slurp(fs::path(out_a) / run_id / "metrics.jsonl");
    if (ok && metrics_a != slurp(fs::path(out_b) / run_id / "metrics.jsonl")) {
        ok = false;
        detail += "rerun metrics differ; ";
    }

    // Interrupting after epoch 3 and resuming must replay epochs 4..5
    // byte-identically.
    if (ok) {
        fs::create_directories(fs::path(out_c) / run_id);
        fs::copy(fs::path(out_a) / run_id / "checkpoint_e0003.bin",
                 fs::path(out_c) / run_id / "checkpoint_e0003.bin");
        std::istringstream all(metrics_a);
        std::ofstream truncated(fs::path(out_c) / run_id / "metrics.jsonl");
        std::string line;
        for (int i = 0; i < 4 && std::getline(all, line); ++i) truncated << line << "\n";
        truncated.close();
        ok = shell(cli + " train --resume " +
                   (fs::path(out_c) / run_id / "checkpoint_e0003.bin").string() + " --out " +
                   out_c) == 0;
        if (ok && slurp(fs::path(out_c) / run_id / "metrics.jsonl") != metrics_a) {
            ok = false;
            detail += "resumed metrics differ";
        }
    }
    fs::remove_all(dir);
    report(8, "determinism & resume", ok, omp_get_wtime() - t0,
           detail.empty() ? "rerun and resume byte-identical" : detail);
}

// ---------------------------------------------------------------- 9
void criterion9() {
    const double t0 = omp_get_wtime();
    Prng seeder(7, Stream::Data);
    bool ok = true;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        Dims dims;
        dims.n_features = 4;
        dims.feature_dim = 6;
        dims.router_hidden = 4;
        dims.n_classes = 3;
        const std::vector<std::vector<int>> shapes = {{8, 4, 4}, {4, 4, 4, 4}, {16}, {3, 5}, {2, 2}};
        const MoeModel m =
            init_model(TierConfig{shapes[trial % shapes.size()]}, dims, seeder.next_u64());
        const LabeledBatch test =
            random_batch(32 + static_cast<int>(seeder.next_below(64)), 4, 3, seeder.next_u64());
        const EvalResult ev = evaluate(m, test, 0.9);
        double sum = 0.0;
        for (double v : ev.report.flow.pct) sum += v;
        ok = ok && std::abs(sum - 100.0) <= 1e-9;
        for (int t = 0; t < ev.report.flow.n_tiers && ok; ++t) {
            double row = 0.0;
            for (int j = 0; j < ev.report.flow.n_tiers; ++j) row += ev.report.flow.at(t, j);
            ok = std::abs(row / 100.0 - ev.report.tier_usage[t]) <= 1e-9;
        }
    }
    report(9, "flow-matrix properties", ok, omp_get_wtime() - t0,
           "1000 random fixtures: entries sum to 100, row marginals equal tier usage");
}

}  // namespace

int main() {
    std::printf("acceptance suite (omp_max_threads=%d)\n", omp_get_max_threads());
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    std::printf("%d criterion failure(s)\n", g_failures);
    return g_failures;
}
