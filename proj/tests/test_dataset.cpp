#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tsgen/dataset.hpp"
#include "tsgen/errors.hpp"
#include "tsgen/rng.hpp"

using namespace tsgen;

namespace {

Schema mixed_schema() {
    ColumnSchema x{"x", ColumnKind::Continuous, {}, "pu", ColumnRole::Feature};
    ColumnSchema y{"y", ColumnKind::Continuous, {}, "rad", ColumnRole::Feature};
    ColumnSchema c{"c", ColumnKind::Categorical, {"low", "high"}, "", ColumnRole::Condition};
    ColumnSchema s{"s", ColumnKind::Categorical, {"stable", "unstable"}, "", ColumnRole::Label};
    return {x, y, c, s};
}

SampleTable random_table(std::size_t n, std::uint64_t seed) {
    SampleTable t;
    t.schema = mixed_schema();
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        t.rows.push_back({rng.normal() * 1e3, rng.uniform(-3.0, 3.0),
                          static_cast<double>(rng.below(2)), static_cast<double>(rng.below(2))});
    }
    return t;
}

std::string temp_path(const std::string& name) {
    return "tsgen_test_" + name;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("load_table parses a small csv") {
    const auto path = temp_path("small.csv");
    {
        std::ofstream out(path);
        out << "x,y,c,s\n1.5,0.25,low,stable\n-2,0.5,high,unstable\n0,0,low,stable\n";
    }
    const auto t = load_table(path, mixed_schema());
    CHECK(t.n_rows() == 3);
    CHECK(t.rows[0][0] == doctest::Approx(1.5));
    CHECK(t.rows[1][2] == 1.0);
    CHECK(t.rows[2][3] == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("load_table rejects permuted headers and bad cells") {
    const auto path = temp_path("bad.csv");
    {
        std::ofstream out(path);
        out << "y,x,c,s\n1,1,low,stable\n";
    }
    CHECK_THROWS_AS(load_table(path, mixed_schema()), DataError);
    {
        std::ofstream out(path);
        out << "x,y,c,s\n1,notanumber,low,stable\n";
    }
    CHECK_THROWS_AS(load_table(path, mixed_schema()), DataError);
    {
        std::ofstream out(path);
        out << "x,y,c,s\n1,1,medium,stable\n";
    }
    CHECK_THROWS_AS(load_table(path, mixed_schema()), DataError);
    {
        std::ofstream out(path);
        out << "x,y,c,s\n1,1,low,stable,extra\n";
    }
    CHECK_THROWS_AS(load_table(path, mixed_schema()), DataError);
    std::remove(path.c_str());
}

TEST_CASE("save_table writes a header-only file for an empty table") {
    const auto path = temp_path("empty.csv");
    SampleTable t;
    t.schema = mixed_schema();
    save_table(t, path);
    CHECK(file_bytes(path) == "x,y,c,s\n");
    const auto back = load_table(path, t.schema);
    CHECK(back.n_rows() == 0);
    std::remove(path.c_str());
}

TEST_CASE("save/load round-trip is the identity and deterministic") {
    const auto path = temp_path("rt.csv");
    const auto path2 = temp_path("rt2.csv");
    const auto t = random_table(1000, 42);
    save_table(t, path);
    const auto back = load_table(path, t.schema);
    REQUIRE(back.n_rows() == t.n_rows());
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
        for (std::size_t c = 0; c < t.n_cols(); ++c) {
            CHECK(back.rows[r][c] == t.rows[r][c]);  // bit-exact
        }
    }
    save_table(back, path2);
    CHECK(file_bytes(path) == file_bytes(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("schema sidecar round-trips") {
    const auto path = temp_path("schema.json");
    const auto schema = mixed_schema();
    save_schema(schema, path);
    const auto back = load_schema(path);
    REQUIRE(back.size() == schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        CHECK(back[i].name == schema[i].name);
        CHECK(back[i].kind == schema[i].kind);
        CHECK(back[i].categories == schema[i].categories);
        CHECK(back[i].unit == schema[i].unit);
        CHECK(back[i].role == schema[i].role);
    }
    std::remove(path.c_str());
}

TEST_CASE("split_dataset sizes follow round(fraction * N)") {
    const auto t = random_table(14221, 7);
    const auto split = split_dataset(t, 0.6, 11);
    CHECK(split.train.n_rows() == 8533);
    CHECK(split.test.n_rows() == 5688);
}

TEST_CASE("split_dataset is deterministic and a true partition") {
    const auto t = random_table(100, 3);
    const auto a = split_dataset(t, 0.8, 99);
    const auto b = split_dataset(t, 0.8, 99);
    CHECK(a.train.rows == b.train.rows);
    CHECK(a.test.rows == b.test.rows);

    // Every source row lands in exactly one side (rows are unique w.h.p.).
    std::map<std::vector<double>, int> counts;
    for (const auto& r : t.rows) counts[r] += 1;
    for (const auto& r : a.train.rows) counts[r] -= 1;
    for (const auto& r : a.test.rows) counts[r] -= 1;
    for (const auto& [_, v] : counts) CHECK(v == 0);
}

TEST_CASE("split_dataset partition property over seeds and fractions") {
    const auto t = random_table(57, 5);
    for (const double f : {0.1, 0.33, 0.5, 0.9}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto s = split_dataset(t, f, seed);
            CHECK(s.train.n_rows() + s.test.n_rows() == t.n_rows());
            const auto want = static_cast<std::size_t>(std::llround(f * 57.0));
            CHECK(s.train.n_rows() == want);
        }
    }
    CHECK_THROWS_AS(split_dataset(SampleTable{mixed_schema(), {}}, 0.5, 1), DataError);
}

TEST_CASE("union_datasets concatenates in order") {
    const auto a = random_table(20, 1);
    const auto b = random_table(15, 2);
    const auto u = union_datasets(a, b);
    REQUIRE(u.n_rows() == 35);
    CHECK(u.rows[0] == a.rows[0]);
    CHECK(u.rows[20] == b.rows[0]);

    const auto empty = SampleTable{a.schema, {}};
    const auto same = union_datasets(a, empty);
    CHECK(same.rows == a.rows);

    SampleTable other = b;
    other.schema[0].name = "renamed";
    CHECK_THROWS_AS(union_datasets(a, other), DataError);
}

TEST_CASE("union class counts equal the sum of parts") {
    const auto a = random_table(200, 10);
    const auto b = random_table(300, 11);
    const auto u = union_datasets(a, b);
    const auto ca = class_balance(a, "s");
    const auto cb = class_balance(b, "s");
    const auto cu = class_balance(u, "s");
    for (const auto& cat : {"stable", "unstable"}) {
        CHECK(cu.at(cat).count == ca.at(cat).count + cb.at(cat).count);
    }
}

TEST_CASE("class_balance proportions") {
    // Constructed 81/19 table mirroring the corpus ratio.
    SampleTable t;
    t.schema = mixed_schema();
    for (int i = 0; i < 11510; ++i) t.rows.push_back({0.0, 0.0, 0.0, 0.0});
    for (int i = 0; i < 2711; ++i) t.rows.push_back({0.0, 0.0, 0.0, 1.0});
    const auto bal = class_balance(t, "s");
    CHECK(bal.at("stable").count == 11510);
    CHECK(bal.at("unstable").count == 2711);
    CHECK(bal.at("stable").proportion == doctest::Approx(0.8094).epsilon(1e-4));
    CHECK(bal.at("unstable").proportion == doctest::Approx(0.1906).epsilon(1e-4));
    double sum = 0.0;
    for (const auto& [_, v] : bal) sum += v.proportion;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(class_balance(t, "x"), DataError);
    CHECK_THROWS_AS(class_balance(t, "missing"), DataError);

    SampleTable one;
    one.schema = mixed_schema();
    one.rows.push_back({0.0, 0.0, 1.0, 0.0});
    CHECK(class_balance(one, "c").at("high").proportion == 1.0);
}

TEST_CASE("class_balance is invariant to row order") {
    auto t = random_table(500, 9);
    const auto before = class_balance(t, "c");
    Rng rng(4);
    rng.shuffle(t.rows);
    const auto after = class_balance(t, "c");
    CHECK(before.at("low").count == after.at("low").count);
    CHECK(before.at("high").count == after.at("high").count);
}

TEST_CASE("uniform 18-level column balances near 1/18") {
    SampleTable t;
    ColumnSchema level{"level", ColumnKind::Categorical, {}, "percent", ColumnRole::Condition};
    for (int i = 0; i < 18; ++i) level.categories.push_back(std::to_string(60 + 5 * i) + "%");
    ColumnSchema s{"s", ColumnKind::Categorical, {"stable", "unstable"}, "", ColumnRole::Label};
    t.schema = {level, s};
    for (int i = 0; i < 18000; ++i) t.rows.push_back({static_cast<double>(i % 18), 0.0});
    const auto bal = class_balance(t, "level");
    for (const auto& [_, v] : bal) CHECK(v.proportion == doctest::Approx(1.0 / 18).epsilon(1e-9));
}

TEST_CASE("schema invariants are enforced") {
    auto schema = mixed_schema();
    schema[1].name = "x";  // duplicate
    CHECK_THROWS_AS(validate_schema(schema), DataError);

    schema = mixed_schema();
    schema[2].categories = {"only"};
    CHECK_THROWS_AS(validate_schema(schema), DataError);

    schema = mixed_schema();
    schema[3].role = ColumnRole::Feature;  // no label left
    CHECK_THROWS_AS(validate_schema(schema), DataError);

    SampleTable t;
    t.schema = mixed_schema();
    t.rows.push_back({1.0, 2.0, 0.0});  // short row
    CHECK_THROWS_AS(t.validate(), DataError);
    t.rows[0] = {1.0, std::numeric_limits<double>::infinity(), 0.0, 0.0};
    CHECK_THROWS_AS(t.validate(), DataError);
    t.rows[0] = {1.0, 2.0, 5.0, 0.0};  // category index out of range
    CHECK_THROWS_AS(t.validate(), DataError);
}
