#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tsgen/config.hpp"
#include "tsgen/errors.hpp"

using namespace tsgen;

TEST_CASE("minimal config takes the documented defaults") {
    const auto c = parse_config_text(R"({"seed": 7, "paths": {"case": "x.grid"}})", "test");
    CHECK(c.seed == 7);
    CHECK(c.paths.grid_case == "x.grid");
    CHECK(c.simulate_n == 3000);
    CHECK(c.simulate.load_scale_min == 0.60);
    CHECK(c.simulate.load_scale_max == 1.45);
    CHECK(c.simulate.step == 0.005);
    CHECK(c.transform.max_modes == 10);
    CHECK(c.transform.weight_threshold == 0.005);
    CHECK(c.train.latent_dim == 128);
    CHECK(c.train.hidden == 256);
    CHECK(c.train.batch == 500);
    CHECK(c.train.epochs == 300);
    CHECK(c.train.lr == 2e-4);
    CHECK(c.train.gp_lambda == 10.0);
    CHECK(c.train.dropout == 0.5);
    CHECK(c.train.tau == 0.2);
    CHECK(c.eval.distance_samples == 2000);
    CHECK(c.eval.pca_components == 2);
    CHECK(c.eval.bins == 20);
    CHECK(c.eval.dt_max_depth == 100);
    CHECK(c.eval.mlp_hidden == 200);
    CHECK(c.eval.mlp_max_iter == 500);
    CHECK(c.eval.train_fraction == 0.6);
}

TEST_CASE("unknown keys are rejected with their path") {
    try {
        parse_config_text(R"({"seed": 1, "trian": {}})", "test");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("trian") != std::string::npos);
    }
    try {
        parse_config_text(R"({"train": {"epochss": 10}})", "test");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train.epochss") != std::string::npos);
    }
}

TEST_CASE("range and type violations name the key") {
    try {
        parse_config_text(R"({"train": {"epochs": -1}})", "test");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train.epochs") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text(R"({"train": {"lr": "fast"}})", "test"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({"simulate": {"load_scale_max": 2.0}})", "test"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({"simulate": {"step": 0.5}})", "test"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({"evaluate": {"train_fraction": 1.5}})", "test"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({"seed": -3})", "test"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("not json", "test"), ConfigError);
}

TEST_CASE("resolved dump re-parses to the identical config") {
    const auto c = parse_config_text(
        R"({"seed": 42, "paths": {"case": "a", "out_dir": "b"},
            "simulate": {"n": 123, "step": 0.004},
            "train": {"epochs": 17, "lr": 3e-4},
            "evaluate": {"bins": 12}})",
        "test");
    const auto text = dump_config(c);
    const auto back = parse_config_text(text, "dump");
    CHECK(dump_config(back) == text);  // fixed point
    CHECK(back.seed == 42);
    CHECK(back.simulate_n == 123);
    CHECK(back.simulate.step == 0.004);
    CHECK(back.train.epochs == 17);
    CHECK(back.train.lr == 3e-4);
    CHECK(back.eval.bins == 12);
    CHECK(back.paths.out_dir == "b");
}

TEST_CASE("cross-field validation still applies") {
    CHECK_THROWS_AS(parse_config_text(
                        R"({"simulate": {"load_scale_min": 1.2, "load_scale_max": 0.8}})", "test"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_config_text(
            R"({"simulate": {"fault_position_min": 0.7, "fault_position_max": 0.3}})", "test"),
        ConfigError);
}
