#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "tsgen/errors.hpp"
#include "tsgen/evaluate.hpp"

using namespace tsgen;

namespace {

Schema toy_schema() {
    ColumnSchema f1{"f1", ColumnKind::Continuous, {}, "", ColumnRole::Feature};
    ColumnSchema f2{"f2", ColumnKind::Continuous, {}, "", ColumnRole::Feature};
    ColumnSchema level{"level", ColumnKind::Categorical, {"lo", "hi"}, "", ColumnRole::Condition};
    ColumnSchema label{"stability", ColumnKind::Categorical, {"stable", "unstable"}, "",
                       ColumnRole::Label};
    return {f1, f2, level, label};
}

// Separable two-class cloud with a correlated load-level flag.
SampleTable toy_table(std::size_t n, std::uint64_t seed, double unstable_frac = 0.25) {
    SampleTable t;
    t.schema = toy_schema();
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const bool unstable = rng.uniform() < unstable_frac;
        const double cx = unstable ? 2.5 : -2.5;
        t.rows.push_back({cx + rng.normal(), -cx + 0.7 * rng.normal(),
                          static_cast<double>(rng.below(2)), unstable ? 1.0 : 0.0});
    }
    return t;
}

struct TrainedFixture {
    SampleTable table = toy_table(400, 1);
    Transformer transformer = Transformer::fit(table, [] {
        TransformConfig c;
        c.max_modes = 3;
        c.seed = 2;
        return c;
    }());
    CtganModel model;

    TrainedFixture() {
        TrainConfig cfg;
        cfg.latent_dim = 8;
        cfg.hidden = 24;
        cfg.batch = 40;
        cfg.epochs = 60;
        cfg.seed = 11;
        model = train_ctgan(table, transformer, cfg);
    }
};

}  // namespace

TEST_CASE("classification_report analytics") {
    SampleTable test = toy_table(200, 5, 0.19);
    const std::size_t label = label_column(test.schema);

    std::vector<int> perfect(test.n_rows());
    for (std::size_t r = 0; r < test.n_rows(); ++r) {
        perfect[r] = static_cast<int>(test.rows[r][label]);
    }
    const auto s1 = classification_report(perfect, test);
    CHECK(s1.recall_stable == 1.0);
    CHECK(s1.recall_unstable == 1.0);
    CHECK(s1.f1_stable == 1.0);
    CHECK(s1.accuracy == 1.0);

    // All-stable predictor on imbalanced data.
    const std::vector<int> all_stable(test.n_rows(), 0);
    const auto s2 = classification_report(all_stable, test);
    CHECK(s2.recall_stable == 1.0);
    CHECK(s2.recall_unstable == 0.0);
    std::size_t stable_count = 0;
    for (const auto& row : test.rows) stable_count += row[label] == 0.0;
    CHECK(s2.accuracy ==
          doctest::Approx(static_cast<double>(stable_count) / test.n_rows()).epsilon(1e-12));

    // Missing class flagged as undefined.
    SampleTable stable_only;
    stable_only.schema = test.schema;
    for (const auto& row : test.rows) {
        if (row[label] == 0.0) stable_only.rows.push_back(row);
    }
    const auto s3 = classification_report(
        std::vector<int>(stable_only.n_rows(), 0), stable_only);
    CHECK(s3.recall_stable_defined);
    CHECK_FALSE(s3.recall_unstable_defined);

    CHECK_THROWS_AS(classification_report({0, 1}, test), DataError);
}

TEST_CASE("classification_report is invariant to row order") {
    SampleTable test = toy_table(150, 7);
    std::vector<int> preds(test.n_rows());
    Rng rng(8);
    for (auto& p : preds) p = static_cast<int>(rng.below(2));

    const auto before = classification_report(preds, test);
    // Apply one permutation to rows and predictions together.
    std::vector<std::size_t> perm(test.n_rows());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    SampleTable shuffled;
    shuffled.schema = test.schema;
    std::vector<int> shuffled_preds;
    for (const auto i : perm) {
        shuffled.rows.push_back(test.rows[i]);
        shuffled_preds.push_back(preds[i]);
    }
    const auto after = classification_report(shuffled_preds, shuffled);
    CHECK(before.recall_stable == after.recall_stable);
    CHECK(before.recall_unstable == after.recall_unstable);
    CHECK(before.f1_stable == after.f1_stable);
    CHECK(before.accuracy == after.accuracy);
}

TEST_CASE("proportion report on a degenerate always-unstable generator") {
    TrainedFixture f;
    // Saturate the stability logits: argmax is always 'unstable'.
    CtganModel rigged = f.model;
    const auto& targets = f.transformer.condition_targets();
    const auto stability = targets[0];
    rigged.generator.l3.w.row(static_cast<Eigen::Index>(stability.encoded_offset)).setZero();
    rigged.generator.l3.w.row(static_cast<Eigen::Index>(stability.encoded_offset + 1)).setZero();
    rigged.generator.l3.b(static_cast<Eigen::Index>(stability.encoded_offset)) = -50.0;
    rigged.generator.l3.b(static_cast<Eigen::Index>(stability.encoded_offset + 1)) = 50.0;

    const auto report = conditional_proportion_report(rigged, f.transformer, 60, "stability",
                                                      {"stable", "unstable"}, 3);
    REQUIRE(report.entries.size() == 3);
    for (const auto& entry : report.entries) {
        CHECK(entry.proportions[1] == 1.0);
        double sum = 0.0;
        for (const double p : entry.proportions) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(conditional_proportion_report(rigged, f.transformer, 0, "stability",
                                                  {"stable"}, 1),
                    ConfigError);
    CHECK_THROWS_AS(conditional_proportion_report(rigged, f.transformer, 10, "f1", {}, 1),
                    DataError);
}

TEST_CASE("trained model improves the conditioned proportion") {
    TrainedFixture f;
    const auto report = conditional_proportion_report(f.model, f.transformer, 150, "stability",
                                                      {"unstable"}, 17);
    REQUIRE(report.entries.size() == 2);
    const auto& cond = report.entries[1];
    CHECK(cond.conditioned_proportion > cond.baseline_proportion);
    CHECK(cond.improvement > 0.0);
}

TEST_CASE("distance report: held-out real data looks like the baseline") {
    const auto real = toy_table(1200, 23);
    const auto held_out = toy_table(600, 29);  // same generator, fresh draw

    double worst_ratio = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto report = distance_report(real, held_out, 300, 2, 8, seed);
        REQUIRE(report.pairs.size() == 2);
        const auto& baseline = report.pairs[0].distances;
        const auto& gen = report.pairs[1].distances;
        CHECK(std::isfinite(baseline.js));
        CHECK(std::isfinite(gen.js));
        CHECK(baseline.js >= 0.0);
        worst_ratio = std::max(worst_ratio, gen.js / std::max(baseline.js, 1e-12));
    }
    CHECK(worst_ratio < 3.0);

    CHECK_THROWS_AS(distance_report(toy_table(100, 1), held_out, 300, 2, 8, 0), DataError);
}

TEST_CASE("downstream benchmark grid: duplication control") {
    const auto train = toy_table(220, 41);
    const auto test = toy_table(200, 43);

    BenchmarkConfig cfg;
    cfg.dt_max_depth = 8;
    cfg.mlp.hidden = 12;
    cfg.mlp.max_iter = 40;
    cfg.mlp.batch = 50;

    const auto grid = downstream_benchmark(train, train, test, cfg, 3);
    REQUIRE(grid.size() == 6);
    for (const auto& row : grid) {
        CHECK((row.model == "DT" || row.model == "MLP"));
        CHECK(row.scores.accuracy > 0.8);  // separable toy
    }
    // gen == train makes union a duplicate of train: DT is bit-identical,
    // MLP within seed noise on this separable cloud.
    const auto find = [&](const std::string& m, const std::string& d) {
        for (const auto& row : grid) {
            if (row.model == m && row.dataset == d) return row.scores;
        }
        throw std::logic_error("missing row");
    };
    CHECK(find("DT", "train").recall_unstable == find("DT", "union").recall_unstable);
    CHECK(std::abs(find("MLP", "train").recall_unstable -
                   find("MLP", "union").recall_unstable) < 0.05);
}
