#include "tsgen/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tsgen/errors.hpp"

namespace tsgen {

using json = nlohmann::json;

void EvalConfig::validate() const {
    const auto bad = [](const std::string& why) { throw ConfigError("evaluate config: " + why); };
    if (proportion_samples < 1) bad("proportion_samples must be positive");
    if (distance_samples < 1) bad("distance_samples must be positive");
    if (pca_components < 1) bad("pca_components must be positive");
    if (bins < 1) bad("bins must be positive");
    if (dt_max_depth < 0) bad("dt_max_depth must be nonnegative");
    if (mlp_hidden < 1) bad("mlp_hidden must be positive");
    if (mlp_batch < 1) bad("mlp_batch must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        bad("train_fraction must lie in (0, 1)");
    }
    if (benchmark_seeds < 1) bad("benchmark_seeds must be positive");
}

void PipelineConfig::validate() const {
    if (simulate_n < 1) throw ConfigError("simulate.n must be positive");
    simulate.validate();
    train.validate();
    eval.validate();
    if (transform.max_modes < 1 || transform.max_modes > 64) {
        throw ConfigError("transform.max_modes must lie in [1, 64]");
    }
    if (!(transform.weight_threshold >= 0.0 && transform.weight_threshold < 1.0)) {
        throw ConfigError("transform.weight_threshold must lie in [0, 1)");
    }
}

namespace {

void expect_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown config key '" + path + key + "'");
    }
}

double read_real(const json& obj, const std::string& path, const std::string& key, double fallback,
                 double lo, double hi) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError("'" + path + key + "': expected a number");
    const double x = v.get<double>();
    if (!(x >= lo && x <= hi)) {
        std::ostringstream msg;
        msg << "'" << path << key << "': value " << x << " outside [" << lo << ", " << hi << "]";
        throw ConfigError(msg.str());
    }
    return x;
}

std::int64_t read_int(const json& obj, const std::string& path, const std::string& key,
                      std::int64_t fallback, std::int64_t lo, std::int64_t hi) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        throw ConfigError("'" + path + key + "': expected an integer");
    }
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi) {
        throw ConfigError("'" + path + key + "': value " + std::to_string(x) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return x;
}

std::uint64_t read_seed(const json& obj, const std::string& path, const std::string& key,
                        std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        throw ConfigError("'" + path + key + "': expected an integer seed");
    }
    if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
        throw ConfigError("'" + path + key + "': seed must be nonnegative");
    }
    return v.get<std::uint64_t>();
}

std::string read_string(const json& obj, const std::string& path, const std::string& key,
                        const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError("'" + path + key + "': expected a string");
    return v.get<std::string>();
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }

    PipelineConfig c;
    expect_keys(j, "", {"seed", "paths", "simulate", "transform", "train", "evaluate"});
    c.seed = read_seed(j, "", "seed", 0);

    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        expect_keys(p, "paths.", {"case", "data", "transformer", "model", "out_dir"});
        c.paths.grid_case = read_string(p, "paths.", "case", "");
        c.paths.data = read_string(p, "paths.", "data", "");
        c.paths.transformer = read_string(p, "paths.", "transformer", "");
        c.paths.model = read_string(p, "paths.", "model", "");
        c.paths.out_dir = read_string(p, "paths.", "out_dir", "");
    }

    if (j.contains("simulate")) {
        const auto& s = j.at("simulate");
        expect_keys(s, "simulate.",
                    {"n", "load_scale_min", "load_scale_max", "fault_position_min",
                     "fault_position_max", "clearing_time_min", "clearing_time_max", "horizon",
                     "step"});
        c.simulate_n = static_cast<std::size_t>(read_int(s, "simulate.", "n", 3000, 1, 1 << 24));
        c.simulate.load_scale_min =
            read_real(s, "simulate.", "load_scale_min", c.simulate.load_scale_min, 0.60, 1.45);
        c.simulate.load_scale_max =
            read_real(s, "simulate.", "load_scale_max", c.simulate.load_scale_max, 0.60, 1.45);
        c.simulate.fault_position_min = read_real(s, "simulate.", "fault_position_min",
                                                  c.simulate.fault_position_min, 0.20, 0.80);
        c.simulate.fault_position_max = read_real(s, "simulate.", "fault_position_max",
                                                  c.simulate.fault_position_max, 0.20, 0.80);
        c.simulate.clearing_time_min = read_real(s, "simulate.", "clearing_time_min",
                                                 c.simulate.clearing_time_min, 1.0 / 60, 1.0 / 3);
        c.simulate.clearing_time_max = read_real(s, "simulate.", "clearing_time_max",
                                                 c.simulate.clearing_time_max, 1.0 / 60, 1.0 / 3);
        c.simulate.horizon = read_real(s, "simulate.", "horizon", c.simulate.horizon, 0.5, 60.0);
        c.simulate.step = read_real(s, "simulate.", "step", c.simulate.step, 1e-4, 0.02);
    }

    if (j.contains("transform")) {
        const auto& t = j.at("transform");
        expect_keys(t, "transform.", {"max_modes", "weight_threshold"});
        c.transform.max_modes =
            static_cast<std::size_t>(read_int(t, "transform.", "max_modes", 10, 1, 64));
        c.transform.weight_threshold =
            read_real(t, "transform.", "weight_threshold", 0.005, 0.0, 0.5);
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        expect_keys(t, "train.",
                    {"latent_dim", "hidden", "batch", "epochs", "lr", "gp_lambda", "dropout",
                     "tau"});
        c.train.latent_dim =
            static_cast<std::size_t>(read_int(t, "train.", "latent_dim", 128, 1, 4096));
        c.train.hidden = static_cast<std::size_t>(read_int(t, "train.", "hidden", 256, 1, 8192));
        c.train.batch = static_cast<std::size_t>(read_int(t, "train.", "batch", 500, 2, 100000));
        c.train.epochs =
            static_cast<std::size_t>(read_int(t, "train.", "epochs", 300, 0, 1000000));
        c.train.lr = read_real(t, "train.", "lr", 2e-4, 1e-8, 1.0);
        c.train.gp_lambda = read_real(t, "train.", "gp_lambda", 10.0, 0.0, 1e4);
        c.train.dropout = read_real(t, "train.", "dropout", 0.5, 0.0, 0.99);
        c.train.tau = read_real(t, "train.", "tau", 0.2, 1e-3, 10.0);
    }

    if (j.contains("evaluate")) {
        const auto& e = j.at("evaluate");
        expect_keys(e, "evaluate.",
                    {"proportion_samples", "distance_samples", "pca_components", "bins",
                     "dt_max_depth", "mlp_hidden", "mlp_max_iter", "mlp_batch", "train_fraction",
                     "benchmark_seeds"});
        c.eval.proportion_samples = static_cast<std::size_t>(
            read_int(e, "evaluate.", "proportion_samples", 2000, 1, 1 << 24));
        c.eval.distance_samples = static_cast<std::size_t>(
            read_int(e, "evaluate.", "distance_samples", 2000, 1, 1 << 24));
        c.eval.pca_components =
            static_cast<std::size_t>(read_int(e, "evaluate.", "pca_components", 2, 1, 64));
        c.eval.bins = static_cast<std::size_t>(read_int(e, "evaluate.", "bins", 20, 1, 4096));
        c.eval.dt_max_depth =
            static_cast<int>(read_int(e, "evaluate.", "dt_max_depth", 100, 0, 10000));
        c.eval.mlp_hidden =
            static_cast<std::size_t>(read_int(e, "evaluate.", "mlp_hidden", 200, 1, 8192));
        c.eval.mlp_max_iter =
            static_cast<std::size_t>(read_int(e, "evaluate.", "mlp_max_iter", 500, 1, 1000000));
        c.eval.mlp_batch =
            static_cast<std::size_t>(read_int(e, "evaluate.", "mlp_batch", 200, 1, 100000));
        c.eval.train_fraction =
            read_real(e, "evaluate.", "train_fraction", 0.6, 1e-6, 1.0 - 1e-6);
        c.eval.benchmark_seeds =
            static_cast<std::size_t>(read_int(e, "evaluate.", "benchmark_seeds", 5, 1, 1000));
    }

    c.validate();
    return c;
}

PipelineConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string dump_config(const PipelineConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["paths"] = {{"case", c.paths.grid_case},
                  {"data", c.paths.data},
                  {"transformer", c.paths.transformer},
                  {"model", c.paths.model},
                  {"out_dir", c.paths.out_dir}};
    j["simulate"] = {{"n", c.simulate_n},
                     {"load_scale_min", c.simulate.load_scale_min},
                     {"load_scale_max", c.simulate.load_scale_max},
                     {"fault_position_min", c.simulate.fault_position_min},
                     {"fault_position_max", c.simulate.fault_position_max},
                     {"clearing_time_min", c.simulate.clearing_time_min},
                     {"clearing_time_max", c.simulate.clearing_time_max},
                     {"horizon", c.simulate.horizon},
                     {"step", c.simulate.step}};
    j["transform"] = {{"max_modes", c.transform.max_modes},
                      {"weight_threshold", c.transform.weight_threshold}};
    j["train"] = {{"latent_dim", c.train.latent_dim}, {"hidden", c.train.hidden},
                  {"batch", c.train.batch},           {"epochs", c.train.epochs},
                  {"lr", c.train.lr},                 {"gp_lambda", c.train.gp_lambda},
                  {"dropout", c.train.dropout},       {"tau", c.train.tau}};
    j["evaluate"] = {{"proportion_samples", c.eval.proportion_samples},
                     {"distance_samples", c.eval.distance_samples},
                     {"pca_components", c.eval.pca_components},
                     {"bins", c.eval.bins},
                     {"dt_max_depth", c.eval.dt_max_depth},
                     {"mlp_hidden", c.eval.mlp_hidden},
                     {"mlp_max_iter", c.eval.mlp_max_iter},
                     {"mlp_batch", c.eval.mlp_batch},
                     {"train_fraction", c.eval.train_fraction},
                     {"benchmark_seeds", c.eval.benchmark_seeds}};
    return j.dump(2);
}

}  // namespace tsgen
