#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <set>

#include "tsgen/errors.hpp"
#include "tsgen/transform.hpp"

using namespace tsgen;

namespace {

// Two continuous columns (one bimodal, one constant), load-level condition,
// stability label.
Schema toy_schema() {
    ColumnSchema f1{"f1", ColumnKind::Continuous, {}, "pu", ColumnRole::Feature};
    ColumnSchema f2{"f2", ColumnKind::Continuous, {}, "pu", ColumnRole::Feature};
    ColumnSchema level{"load_level", ColumnKind::Categorical, {}, "percent", ColumnRole::Condition};
    for (int i = 0; i < 18; ++i) level.categories.push_back(std::to_string(60 + 5 * i) + "%");
    ColumnSchema label{"stability", ColumnKind::Categorical, {"stable", "unstable"}, "",
                       ColumnRole::Label};
    return {f1, f2, level, label};
}

SampleTable toy_table(std::size_t n, std::uint64_t seed, double unstable_frac = 0.2) {
    SampleTable t;
    t.schema = toy_schema();
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double center = rng.uniform() < 0.5 ? -5.0 : 5.0;
        t.rows.push_back({center + 0.5 * rng.normal(), 7.0,
                          static_cast<double>(rng.below(18)),
                          rng.uniform() < unstable_frac ? 1.0 : 0.0});
    }
    return t;
}

TransformConfig quick_config(std::uint64_t seed = 0) {
    TransformConfig c;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("layout width follows the sum formula and blocks are contiguous") {
    const auto table = toy_table(600, 1);
    const auto t = Transformer::fit(table, quick_config());

    std::size_t want = 0;
    for (std::size_t c = 0; c < table.schema.size(); ++c) {
        if (table.schema[c].kind == ColumnKind::Continuous) {
            want += 1 + t.column_model(c).n_modes();
        } else {
            want += table.schema[c].categories.size();
        }
    }
    CHECK(t.encoded_width() == want);
    CHECK(t.condition_dim() == 20);

    std::size_t offset = 0;
    for (const auto& b : t.blocks()) {
        CHECK(b.offset == offset);
        offset += b.size;
    }
    CHECK(offset == t.encoded_width());
    // Continuous blocks first, categoricals appended afterwards.
    CHECK(t.blocks()[0].continuous);
    CHECK(t.blocks()[1].continuous);
    CHECK_FALSE(t.blocks()[2].continuous);
    CHECK_FALSE(t.blocks()[3].continuous);
    // Condition targets: stability block then load block.
    REQUIRE(t.condition_targets().size() == 2);
    CHECK(t.condition_targets()[0].size == 2);
    CHECK(t.condition_targets()[1].size == 18);
}

TEST_CASE("encode/decode round-trips the clamp-free set") {
    const auto table = toy_table(500, 2);
    const auto t = Transformer::fit(table, quick_config());

    for (const auto& row : table.rows) {
        const auto enc = t.encode_row(row);
        const auto back = t.decode_row(enc);
        CHECK(back[2] == row[2]);  // categorical exact
        CHECK(back[3] == row[3]);
        CHECK(std::abs(back[0] - row[0]) < 1e-9);
        CHECK(back[1] == doctest::Approx(row[1]).epsilon(1e-9));
    }
}

TEST_CASE("constant columns encode to beta zero") {
    const auto table = toy_table(300, 3);
    const auto t = Transformer::fit(table, quick_config());
    const auto& block = t.blocks()[1];  // f2 is constant
    for (int r = 0; r < 20; ++r) {
        const auto enc = t.encode_row(table.rows[static_cast<std::size_t>(r)]);
        CHECK(enc(static_cast<Eigen::Index>(block.offset)) == 0.0);
    }
}

TEST_CASE("soft blocks decode by argmax") {
    const auto table = toy_table(300, 4);
    const auto t = Transformer::fit(table, quick_config());
    auto enc = t.encode_row(table.rows[0]);
    const auto& b0 = t.blocks()[0];
    REQUIRE(b0.size >= 3);  // beta + >= 2 modes
    // Overwrite the one-hot mode block with a soft distribution.
    for (std::size_t i = 0; i < b0.size - 1; ++i) {
        enc(static_cast<Eigen::Index>(b0.offset + 1 + i)) = i == 1 ? 0.7 : 0.2 / (b0.size - 2);
    }
    enc(static_cast<Eigen::Index>(b0.offset)) = 0.0;
    const auto row = t.decode_row(enc);
    CHECK(row[0] == doctest::Approx(t.column_model(0).modes[1].mean));

    Eigen::VectorXd wrong = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(t.decode_row(wrong), DataError);
}

TEST_CASE("encode_table parallel matches serial; fits agree too") {
    const auto table = toy_table(800, 5);
    const auto tp = Transformer::fit(table, quick_config(9));
    const auto ts = Transformer::fit_serial(table, quick_config(9));
    CHECK(tp.fingerprint() == ts.fingerprint());
    for (std::size_t c = 0; c < 2; ++c) {
        REQUIRE(tp.column_model(c).n_modes() == ts.column_model(c).n_modes());
        for (std::size_t m = 0; m < tp.column_model(c).n_modes(); ++m) {
            CHECK(tp.column_model(c).modes[m].mean == ts.column_model(c).modes[m].mean);
        }
    }
    const auto ep = tp.encode_table(table);
    const auto es = tp.encode_table_serial(table);
    CHECK((ep - es).cwiseAbs().maxCoeff() == 0.0);

    const auto decoded = tp.decode_table(ep);
    CHECK(decoded.n_rows() == table.n_rows());
    for (std::size_t r = 0; r < 50; ++r) {
        CHECK(decoded.rows[r][2] == table.rows[r][2]);
        CHECK(decoded.rows[r][3] == table.rows[r][3]);
    }
}

TEST_CASE("condition vectors place indicators per block") {
    const auto table = toy_table(300, 6);
    const auto t = Transformer::fit(table, quick_config());

    const auto v1 = t.build_cond_vector("stable", "100%");
    REQUIRE(v1.size() == 20);
    CHECK(v1(0) == 1.0);
    CHECK(v1(10) == 1.0);
    CHECK(v1.sum() == 2.0);

    const auto v2 = t.build_cond_vector("unstable", "60%");
    CHECK(v2(1) == 1.0);
    CHECK(v2(2) == 1.0);
    CHECK(v2.sum() == 2.0);

    CHECK_THROWS_AS(t.build_cond_vector("wobbly", "60%"), DataError);
    CHECK_THROWS_AS(t.build_cond_vector("stable", "61%"), DataError);

    // All 36 combinations are distinct vectors.
    std::set<std::vector<double>> seen;
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t l = 0; l < 18; ++l) {
            const auto v = t.build_cond_vector(s, l);
            seen.insert(std::vector<double>(v.data(), v.data() + v.size()));
        }
    }
    CHECK(seen.size() == 36);
}

TEST_CASE("training sampler matches conditions to rows and boosts the minority") {
    const auto table = toy_table(4000, 7, 0.19);
    const auto t = Transformer::fit(table, quick_config());
    const TrainingSampler sampler(table, t);

    Rng rng(11);
    std::size_t unstable_draws = 0, n_draws = 10000;
    for (std::size_t i = 0; i < n_draws; ++i) {
        const auto draw = sampler.sample(rng);
        // The matched row carries exactly the sampled categories.
        const auto& row = table.rows[draw.row];
        CHECK(draw.cond(static_cast<Eigen::Index>(row[3])) == 1.0);
        CHECK(draw.cond(static_cast<Eigen::Index>(2 + row[2])) == 1.0);
        if (draw.cond(1) == 1.0) ++unstable_draws;
    }
    const double raw = class_balance(table, "stability").at("unstable").proportion;
    CHECK(static_cast<double>(unstable_draws) / n_draws > raw + 0.05);

    // Degenerate support: every draw yields the only present category.
    auto only_unstable = table;
    only_unstable.rows.clear();
    for (const auto& r : table.rows) {
        if (r[3] == 1.0) only_unstable.rows.push_back(r);
    }
    const auto tu = Transformer::fit(only_unstable, quick_config());
    const TrainingSampler su(only_unstable, tu);
    Rng rng2(12);
    for (int i = 0; i < 200; ++i) {
        CHECK(su.sample(rng2).cond(1) == 1.0);
    }
}

TEST_CASE("sample_training_condition is deterministic per seed") {
    const auto table = toy_table(500, 8);
    const auto t = Transformer::fit(table, quick_config());
    const auto a = sample_training_condition(table, t, 303);
    const auto b = sample_training_condition(table, t, 303);
    CHECK(a.second == b.second);
    CHECK((a.first - b.first).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transformer file round-trips exactly") {
    const auto path = "tsgen_test_transformer.json";
    const auto table = toy_table(600, 9);
    const auto t = Transformer::fit(table, quick_config(17));
    t.save(path);
    const auto back = Transformer::load(path);

    CHECK(back.fingerprint() == t.fingerprint());
    CHECK(back.encoded_width() == t.encoded_width());
    CHECK(back.condition_dim() == t.condition_dim());
    for (std::size_t c = 0; c < 2; ++c) {
        REQUIRE(back.column_model(c).n_modes() == t.column_model(c).n_modes());
        for (std::size_t m = 0; m < t.column_model(c).n_modes(); ++m) {
            CHECK(back.column_model(c).modes[m].weight == t.column_model(c).modes[m].weight);
            CHECK(back.column_model(c).modes[m].mean == t.column_model(c).modes[m].mean);
            CHECK(back.column_model(c).modes[m].std_dev == t.column_model(c).modes[m].std_dev);
        }
    }
    for (const auto& row : {table.rows[0], table.rows[5]}) {
        CHECK((back.encode_row(row) - t.encode_row(row)).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(back.category_counts() == t.category_counts());
    std::remove(path);
}
