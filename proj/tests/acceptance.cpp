// Acceptance runner: one line per criterion, nonzero exit on any failure.
// Heavy artifacts (corpus, transformer, trained generators) are built once
// up front and shared.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tsgen/ctgan.hpp"
#include "tsgen/dataset.hpp"
#include "tsgen/evaluate.hpp"
#include "tsgen/gmm.hpp"
#include "tsgen/metrics.hpp"
#include "tsgen/mlp.hpp"
#include "tsgen/pca.hpp"
#include "tsgen/tds.hpp"
#include "tsgen/transform.hpp"
#include "tsgen/tree.hpp"

using namespace tsgen;
using namespace tsgen::testing;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

struct FlushLine {
    ~FlushLine() { std::fflush(stdout); }
};

std::string data_dir() {
    const char* env = std::getenv("TSGEN_DATA_DIR");
    return env ? env : "data";
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double now_seconds() {
    static const auto start = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct ProportionRatios {
    double stable_ratio = 0.0;
    double unstable_ratio = 0.0;
};

ProportionRatios stability_ratios(const CtganModel& model, const Transformer& transformer,
                                  std::size_t n, std::uint64_t seed) {
    const auto report = conditional_proportion_report(model, transformer, n, "stability",
                                                      {"stable", "unstable"}, seed);
    const double base_stable = report.entries[0].proportions[0];
    const double base_unstable = report.entries[0].proportions[1];
    ProportionRatios r;
    r.stable_ratio = report.entries[1].proportions[0] / std::max(base_stable, 1e-12);
    r.unstable_ratio = report.entries[2].proportions[1] / std::max(base_unstable, 1e-12);
    return r;
}

}  // namespace

int run_all();

int main() {
    try {
        return run_all();
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 1;
    }
}

int run_all() {
    now_seconds();  // pin the clock
    std::printf("== acceptance suite ==\n");

    // Shared artifacts: desk-scale corpus, transformer, three trained
    // generators under the default config.
    const std::uint64_t master = 20240811;
    const GridCase grid = load_grid_case(data_dir() + "/ieee39.grid");
    ScenarioConfig sim;
    sim.seed = derive_seed(master, 1);
    const std::size_t corpus_n = 3000;
    std::printf("-- simulating %zu scenarios...\n", corpus_n);
    std::fflush(stdout);
    const SampleTable corpus = generate_dataset(grid, sim, corpus_n);
    const double unstable_fraction =
        class_balance(corpus, "stability").at("unstable").proportion;
    std::printf("-- corpus unstable fraction %.4f (desk-scale bound [0.05, 0.45])\n",
                unstable_fraction);
    if (!(unstable_fraction >= 0.05 && unstable_fraction <= 0.45)) {
        std::printf("-- corpus outside the calibration bound\n");
        ++g_failures;
    }

    std::printf("-- fitting transformer...\n");
    std::fflush(stdout);
    TransformConfig tc;
    tc.seed = derive_seed(master, 2);
    const Transformer transformer = Transformer::fit(corpus, tc);

    TrainConfig train_cfg;  // defaults: latent 128, hidden 256, batch 500, epochs 300
    std::vector<CtganModel> models;
    for (std::uint64_t s = 0; s < 3; ++s) {
        std::printf("-- training generator, seed %llu...\n",
                    static_cast<unsigned long long>(s));
        std::fflush(stdout);
        TrainConfig cfg = train_cfg;
        cfg.seed = derive_seed(master, 10 + s);
        models.push_back(train_ctgan(corpus, transformer, cfg));
    }

    // Criterion 1: Table 1 analogue, median ratios over 3 seeds, wall-clock
    // budget for corpus + training + reports.
    {
        std::vector<double> stable_ratios, unstable_ratios;
        for (std::size_t i = 0; i < models.size(); ++i) {
            const auto r = stability_ratios(models[i], transformer, 2000,
                                            derive_seed(master, 20 + i));
            stable_ratios.push_back(r.stable_ratio);
            unstable_ratios.push_back(r.unstable_ratio);
        }
        const double med_stable = median(stable_ratios);
        const double med_unstable = median(unstable_ratios);
        const double elapsed = now_seconds();
        const bool pass = med_unstable >= 1.2 && med_stable >= 1.1 && elapsed <= 1800.0;
        char detail[256];
        std::snprintf(detail, sizeof detail,
                      "median unstable ratio %.2fx (>=1.2), stable ratio %.2fx (>=1.1), "
                      "elapsed %.0fs (<=1800)",
                      med_unstable, med_stable, elapsed);
        report(1, pass, detail);
    }

    // Criterion 2: Table 2 analogue on eight load levels.
    {
        const std::vector<std::string> levels = {"70%",  "80%",  "90%",  "100%",
                                                 "110%", "120%", "130%", "140%"};
        const auto rep = conditional_proportion_report(models[0], transformer, 2000,
                                                       "load_level", levels,
                                                       derive_seed(master, 30));
        int positive = 0;
        for (std::size_t i = 1; i < rep.entries.size(); ++i) {
            if (rep.entries[i].conditioned_proportion > rep.entries[i].baseline_proportion) {
                ++positive;
            }
        }
        char detail[128];
        std::snprintf(detail, sizeof detail, "%d of 8 levels improved (need >= 6)", positive);
        report(2, positive >= 6, detail);
    }

    // Criterion 3: Table 3 analogue. Desk-scale m=1000 so A, B, and the
    // held-out control stay disjoint inside the corpus.
    {
        const std::size_t m = 1000;
        const SampleTable generated =
            generate_samples(models[0], transformer, m, {}, derive_seed(master, 40));
        const auto rep = distance_report(corpus, generated, m, 2, 20, derive_seed(master, 41));
        const double js_base = rep.pairs[0].distances.js;
        const double js_gen = rep.pairs[1].distances.js;
        const bool finite = std::isfinite(js_base) && std::isfinite(js_gen);
        const double ratio = js_gen / std::max(js_base, 1e-12);

        double worst_control = 0.0;
        for (std::uint64_t s = 0; s < 10; ++s) {
            Rng rng(derive_seed(master, 50 + s));
            std::vector<std::size_t> idx(corpus.n_rows());
            std::iota(idx.begin(), idx.end(), 0);
            rng.shuffle(idx);
            SampleTable pool, held;
            pool.schema = corpus.schema;
            held.schema = corpus.schema;
            for (std::size_t i = 0; i < 2 * m; ++i) pool.rows.push_back(corpus.rows[idx[i]]);
            for (std::size_t i = 2 * m; i < 3 * m; ++i) held.rows.push_back(corpus.rows[idx[i]]);
            const auto control = distance_report(pool, held, m, 2, 20, derive_seed(master, 60 + s));
            worst_control = std::max(worst_control,
                                     control.pairs[1].distances.js /
                                         std::max(control.pairs[0].distances.js, 1e-12));
        }
        const bool pass = finite && ratio <= 25.0 && worst_control <= 3.0;
        char detail[256];
        std::snprintf(detail, sizeof detail,
                      "JS(A,gen)/JS(A,B) = %.4f/%.4f = %.2fx (<=25); held-out control worst "
                      "%.2fx over 10 seeds (<=3)",
                      js_gen, js_base, ratio, worst_control);
        report(3, pass, detail);
    }

    // Criterion 4: Table 4 analogue, median Recall_N deltas over 5 seeds.
    {
        std::vector<double> dt_delta, mlp_delta;
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto split = split_dataset(corpus, 0.6, derive_seed(master, 70 + s));
            const SampleTable gen = generate_samples(models[0], transformer,
                                                     split.train.n_rows(), {},
                                                     derive_seed(master, 80 + s));
            BenchmarkConfig bc;  // defaults: DT depth 100, MLP 200x500
            const auto grid_rows =
                downstream_benchmark(split.train, gen, split.test, bc, derive_seed(master, 90 + s));
            const auto recall_n = [&](const std::string& model, const std::string& dataset) {
                for (const auto& row : grid_rows) {
                    if (row.model == model && row.dataset == dataset) {
                        return row.scores.recall_unstable;
                    }
                }
                return -1.0;
            };
            dt_delta.push_back(recall_n("DT", "union") - recall_n("DT", "train"));
            mlp_delta.push_back(recall_n("MLP", "union") - recall_n("MLP", "train"));
            std::printf("-- benchmark seed %llu: dRecall_N DT %+0.4f MLP %+0.4f\n",
                        static_cast<unsigned long long>(s), dt_delta.back(), mlp_delta.back());
        }
        const double dt_med = median(dt_delta);
        const double mlp_med = median(mlp_delta);
        const bool pass =
            dt_med >= -0.01 && mlp_med >= -0.01 && (dt_med > 0.0 || mlp_med > 0.0);
        char detail[160];
        std::snprintf(detail, sizeof detail,
                      "median dRecall_N: DT %+0.4f, MLP %+0.4f (both >= -0.01, one > 0)", dt_med,
                      mlp_med);
        report(4, pass, detail);
    }

    // Criterion 5: normalization oracle.
    {
        Rng draw(derive_seed(master, 100));
        std::vector<double> mix(10000);
        for (auto& v : mix) {
            v = (draw.uniform() < 0.5 ? -5.0 : 5.0) + 0.5 * draw.normal();
        }
        const auto model = fit_vgm(mix, 10, 0.005, derive_seed(master, 101));
        double err_lo = 1e9, err_hi = 1e9;
        for (const auto& mode : model.modes) {
            if (mode.weight < 0.2) continue;
            err_lo = std::min(err_lo, std::abs(mode.mean + 5.0));
            err_hi = std::min(err_hi, std::abs(mode.mean - 5.0));
        }

        double worst_rt = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double c = (draw.uniform() < 0.5 ? -5.0 : 5.0) + 1.9 * draw.uniform(-1.0, 1.0);
            const auto nv = normalize_value(model, c);
            if (std::abs(nv.beta) >= 1.0) continue;  // clamp-free subset
            worst_rt = std::max(worst_rt, std::abs(denormalize_value(model, nv) - c));
        }

        const auto [lo, hi] = std::minmax_element(mix.begin(), mix.end());
        double max_std = 0.0;
        for (const auto& mode : model.modes) max_std = std::max(max_std, mode.std_dev);
        const double a = *lo - 10.0 * max_std, b = *hi + 10.0 * max_std;
        const int n = 200001;
        const double h = (b - a) / (n - 1);
        double mass = mixture_density(model, a) + mixture_density(model, b);
        for (int i = 1; i < n - 1; ++i) mass += (i % 2 ? 4.0 : 2.0) * mixture_density(model, a + i * h);
        mass *= h / 3.0;

        const bool pass = err_lo < 0.2 && err_hi < 0.2 && worst_rt < 1e-9 &&
                          std::abs(mass - 1.0) < 1e-3;
        char detail[200];
        std::snprintf(detail, sizeof detail,
                      "mode-mean errors %.3f/%.3f (<0.2), round-trip %.1e (<1e-9), density mass "
                      "%.6f (1 +/- 1e-3)",
                      err_lo, err_hi, worst_rt, mass);
        report(5, pass, detail);
    }

    // Criterion 6: gradient oracle for both adversarial losses and the MLP.
    {
        const auto gan = ctgan_gradient_check(derive_seed(master, 110));

        Rng rng(derive_seed(master, 111));
        MlpClassifier mlp;
        mlp.init_net(2, 4, 2, rng);
        Eigen::MatrixXd xb(2, 6);
        std::vector<int> yb(6);
        for (int c = 0; c < 6; ++c) {
            xb(0, c) = rng.normal();
            xb(1, c) = rng.normal();
            yb[static_cast<std::size_t>(c)] = static_cast<int>(rng.below(2));
        }
        auto params = mlp.params();
        const auto mlp_result = finite_difference_check(
            [&]() { return mlp.batch_loss(xb, yb); }, [&]() { mlp.batch_grads(xb, yb); }, params);

        const double worst = std::max(
            {gan.generator.max_rel_error, gan.discriminator.max_rel_error, mlp_result.max_rel_error});
        const bool pass = worst < 1e-4;
        char detail[200];
        std::snprintf(detail, sizeof detail,
                      "max rel error: generator %.2e, critic+gp %.2e, mlp %.2e over %zu params "
                      "(<1e-4)",
                      gan.generator.max_rel_error, gan.discriminator.max_rel_error,
                      mlp_result.max_rel_error, gan.total_params + mlp_result.n_params);
        report(6, pass, detail);
    }

    // Criterion 7: simulator oracle.
    {
        const auto pf = solve_power_flow(grid, 1.0);
        const auto model = prepare_dynamic_model(grid, pf);
        const auto no_fault = simulate_swing({&model, &model, &model}, 0.5, 10.0, 0.005, true);
        double drift = 0.0;
        for (const auto& d : no_fault.deltas) {
            drift = std::max(drift, (d - model.delta0).cwiseAbs().maxCoeff());
        }

        const auto smib = make_smib();
        const auto oracle = equal_area_critical_time(smib);
        double lo = 0.5 * oracle.t_critical, hi = 1.5 * oracle.t_critical;
        bool bracket_ok = smib_label(smib, lo) == StabilityLabel::Stable &&
                          smib_label(smib, hi) == StabilityLabel::Unstable;
        double flip = 0.0;
        if (bracket_ok) {
            while (hi - lo > 1e-4) {
                const double mid = 0.5 * (lo + hi);
                (smib_label(smib, mid) == StabilityLabel::Stable ? lo : hi) = mid;
            }
            flip = 0.5 * (lo + hi);
        }
        const double flip_err = bracket_ok
                                    ? std::abs(flip - oracle.t_critical) / oracle.t_critical
                                    : 1.0;

        const FaultSpec on{5, 0.5, FaultState::FaultOn};
        const FaultSpec off{5, 0.5, FaultState::PostFault};
        const auto fault_on = prepare_dynamic_model(grid, pf, on);
        const auto postfault = prepare_dynamic_model(grid, pf, off);
        const auto coarse = simulate_swing({&model, &fault_on, &postfault}, 0.15, 0.2, 0.005);
        const auto fine = simulate_swing({&model, &fault_on, &postfault}, 0.15, 0.2, 0.0025);
        const double snap_delta =
            (postfault.recover_voltages(coarse.delta_at_clearing) -
             postfault.recover_voltages(fine.delta_at_clearing))
                .cwiseAbs()
                .maxCoeff();

        const bool pass = drift < 1e-6 && flip_err < 0.05 && snap_delta < 1e-4;
        char detail[200];
        std::snprintf(detail, sizeof detail,
                      "no-fault drift %.1e rad (<1e-6), equal-area flip error %.2f%% (<5%%), "
                      "step-halving snapshot delta %.1e pu (<1e-4)",
                      drift, 100.0 * flip_err, snap_delta);
        report(7, pass, detail);
    }

    // Criterion 8: metric analytics and whole-pipeline determinism.
    {
        bool ok = true;
        std::string why;

        Eigen::VectorXd p(4);
        p << 0.1, 0.2, 0.3, 0.4;
        if (js_divergence(p, p) != 0.0) {
            ok = false;
            why += "JS(P,P) != 0; ";
        }
        Eigen::VectorXd a(2), b(2);
        a << 1.0, 0.0;
        b << 0.0, 1.0;
        if (std::abs(js_divergence(a, b) - std::log(2.0)) > 1e-12) {
            ok = false;
            why += "JS disjoint != ln 2; ";
        }
        Eigen::VectorXd pi = Eigen::VectorXd::Zero(8), pj = Eigen::VectorXd::Zero(8);
        pi(2) = 1.0;
        pj(6) = 1.0;
        if (wasserstein_1d(pi, pj, 0.25) != 1.0) {
            ok = false;
            why += "point-mass W not exact; ";
        }

        for (const std::uint64_t seed : {201u, 202u, 203u}) {
            Rng rng(seed);
            Eigen::MatrixXd x(200, 4);
            std::vector<int> y(200);
            for (Eigen::Index r = 0; r < 200; ++r) {
                for (Eigen::Index c = 0; c < 4; ++c) x(r, c) = rng.uniform(-1.0, 1.0);
                y[static_cast<std::size_t>(r)] = static_cast<int>(rng.below(2));
            }
            DecisionTree tree;
            tree.fit(x, y, 2, 4);
            std::vector<std::size_t> idx(y.size());
            std::iota(idx.begin(), idx.end(), 0);
            const auto oracle = brute_build(x, y, idx, 0, 4);
            for (Eigen::Index r = 0; r < 200; ++r) {
                const Eigen::VectorXd row = x.row(r);
                if (tree.predict(row) != brute_predict(*oracle, row)) {
                    ok = false;
                    why += "DT differs from brute-force oracle; ";
                    break;
                }
            }
        }

        // Determinism of every pipeline stage under repeated seeds.
        ScenarioConfig dsim;
        dsim.seed = derive_seed(master, 120);
        const auto sim_a = generate_dataset(grid, dsim, 60);
        const auto sim_b = generate_dataset_serial(grid, dsim, 60);
        if (sim_a.rows != sim_b.rows) {
            ok = false;
            why += "simulate not deterministic; ";
        }

        TransformConfig tcb;
        tcb.seed = derive_seed(master, 121);
        const auto t_a = Transformer::fit(sim_a, tcb);
        const auto t_b = Transformer::fit_serial(sim_b, tcb);
        if (t_a.fingerprint() != t_b.fingerprint()) {
            ok = false;
            why += "transformer fit not deterministic; ";
        }

        TrainConfig tiny;
        tiny.latent_dim = 8;
        tiny.hidden = 16;
        tiny.batch = 20;
        tiny.epochs = 5;
        tiny.seed = derive_seed(master, 122);
        const auto m_a = train_ctgan(sim_a, t_a, tiny);
        const auto m_b = train_ctgan(sim_a, t_a, tiny);
        if (m_a.loss_history != m_b.loss_history) {
            ok = false;
            why += "training not deterministic; ";
        }
        const auto g_a = generate_samples(m_a, t_a, 30, {}, derive_seed(master, 123));
        const auto g_b = generate_samples(m_b, t_a, 30, {}, derive_seed(master, 123));
        if (g_a.rows != g_b.rows) {
            ok = false;
            why += "generation not deterministic; ";
        }
        const auto d_a = distance_report(corpus, g_a, 30, 2, 8, derive_seed(master, 124));
        const auto d_b = distance_report(corpus, g_b, 30, 2, 8, derive_seed(master, 124));
        if (d_a.pairs[1].distances.js != d_b.pairs[1].distances.js) {
            ok = false;
            why += "distance report not deterministic; ";
        }

        report(8, ok, ok ? "analytic identities, DT oracle, and stage determinism all hold"
                         : why);
    }

    std::printf("== %s (%d failure%s), total %.0fs ==\n", g_failures ? "FAILED" : "ALL PASS",
                g_failures, g_failures == 1 ? "" : "s", now_seconds());
    return g_failures ? 1 : 0;
}
