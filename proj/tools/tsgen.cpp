#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tsgen/config.hpp"
#include "tsgen/ctgan.hpp"
#include "tsgen/dataset.hpp"
#include "tsgen/errors.hpp"
#include "tsgen/evaluate.hpp"
#include "tsgen/grid.hpp"
#include "tsgen/tds.hpp"
#include "tsgen/transform.hpp"

namespace fs = std::filesystem;
using namespace tsgen;

namespace {

void print_resolved(const PipelineConfig& config) {
    std::cout << "resolved config:\n" << dump_config(config) << "\n";
    std::cout << "master seed: " << config.seed << "\n";
}

PipelineConfig load_base_config(const std::string& config_path) {
    if (config_path.empty()) return PipelineConfig{};
    return parse_config(config_path);
}

SampleTable load_data_with_sidecar(const std::string& path) {
    const Schema schema = load_schema(path + ".schema");
    return load_table(path, schema);
}

void save_data_with_sidecar(const SampleTable& table, const std::string& path) {
    save_table(table, path);
    save_schema(table.schema, path + ".schema");
}

Transformer load_model_transformer(const std::string& model_path,
                                   const std::string& override_path) {
    const std::string path =
        override_path.empty() ? model_path + ".transformer.json" : override_path;
    return Transformer::load(path);
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(precision);
    ss << v;
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
}

std::string proportion_csv(const ProportionReport& report) {
    std::ostringstream csv;
    csv << "setting";
    for (const auto& cat : report.categories) csv << "," << cat;
    csv << ",conditioned,baseline,improvement\n";
    for (const auto& e : report.entries) {
        csv << e.setting;
        for (const double p : e.proportions) csv << "," << fmt(p, 6);
        csv << "," << fmt(e.conditioned_proportion, 6) << "," << fmt(e.baseline_proportion, 6)
            << "," << fmt(e.improvement, 6) << "\n";
    }
    return csv.str();
}

std::string proportion_text(const ProportionReport& report) {
    std::ostringstream txt;
    txt << "Conditional generation, column '" << report.column << "' (proportions in %)\n";
    txt << "  setting          conditioned   baseline   improvement\n";
    for (const auto& e : report.entries) {
        if (e.setting == "none") continue;
        txt << "  " << e.setting;
        for (std::size_t i = e.setting.size(); i < 16; ++i) txt << ' ';
        txt << " " << fmt(100.0 * e.conditioned_proportion, 2) << "%       "
            << fmt(100.0 * e.baseline_proportion, 2) << "%     "
            << fmt(100.0 * e.improvement, 2) << "%\n";
    }
    return txt.str();
}

std::string distance_csv(const DistanceReport& report) {
    std::ostringstream csv;
    csv << "pair,js_divergence,kl_divergence,wasserstein\n";
    for (const auto& p : report.pairs) {
        csv << p.name << "," << fmt(p.distances.js, 6) << "," << fmt(p.distances.kl, 6) << ","
            << fmt(p.distances.wasserstein, 6) << "\n";
    }
    return csv.str();
}

std::string distance_text(const DistanceReport& report) {
    std::ostringstream txt;
    txt << "Distance between distributions (m=" << report.sample_size
        << ", pca=" << report.pca_components << ", bins=" << report.bins << ")\n";
    txt << "  pair              JS          KL          Wasserstein\n";
    for (const auto& p : report.pairs) {
        txt << "  " << p.name;
        for (std::size_t i = p.name.size(); i < 16; ++i) txt << ' ';
        txt << "  " << fmt(p.distances.js, 6) << "    ";
        txt << fmt(p.distances.kl, 6) << "    " << fmt(p.distances.wasserstein, 6) << "\n";
    }
    return txt.str();
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& grid) {
    std::ostringstream csv;
    csv << "model,dataset,recall_p,recall_n,f1,accuracy\n";
    for (const auto& row : grid) {
        csv << row.model << "," << row.dataset << "," << fmt(row.scores.recall_stable) << ","
            << fmt(row.scores.recall_unstable) << "," << fmt(row.scores.f1_stable) << ","
            << fmt(row.scores.accuracy) << "\n";
    }
    return csv.str();
}

std::string benchmark_text(const std::vector<BenchmarkRow>& grid) {
    std::ostringstream txt;
    txt << "Assessment models on the held-out test split\n";
    txt << "  model  dataset  Recall_P  Recall_N  F1      Accuracy\n";
    for (const auto& row : grid) {
        txt << "  " << row.model << (row.model.size() == 2 ? "     " : "    ") << row.dataset;
        for (std::size_t i = row.dataset.size(); i < 8; ++i) txt << ' ';
        txt << fmt(row.scores.recall_stable) << "    " << fmt(row.scores.recall_unstable)
            << "    " << fmt(row.scores.f1_stable) << "  " << fmt(row.scores.accuracy) << "\n";
    }
    return txt.str();
}

int run_simulate(const PipelineConfig& config, const std::string& out) {
    print_resolved(config);
    const GridCase grid = load_grid_case(config.paths.grid_case);
    ScenarioConfig sim = config.simulate;
    sim.seed = derive_seed(config.seed, kSeedSimulate);
    const SampleTable table = generate_dataset(grid, sim, config.simulate_n);
    save_data_with_sidecar(table, out);
    const auto balance = class_balance(table, "stability");
    std::cout << "wrote " << table.n_rows() << " samples to " << out << "\n";
    for (const auto& [cat, bal] : balance) {
        std::cout << "  " << cat << ": " << bal.count << " (" << fmt(100.0 * bal.proportion, 2)
                  << "%)\n";
    }
    return kExitOk;
}

int run_preprocess(const PipelineConfig& config, const std::string& data,
                   const std::string& out) {
    print_resolved(config);
    const SampleTable table = load_data_with_sidecar(data);
    TransformConfig tc = config.transform;
    tc.seed = derive_seed(config.seed, kSeedTransform);
    const Transformer transformer = Transformer::fit(table, tc);
    transformer.save(out);
    std::cout << "fitted transformer: encoded width " << transformer.encoded_width()
              << ", condition dim " << transformer.condition_dim() << " -> " << out << "\n";
    return kExitOk;
}

int run_train(const PipelineConfig& config, const std::string& data, const std::string& out) {
    print_resolved(config);
    const SampleTable table = load_data_with_sidecar(data);
    TransformConfig tc = config.transform;
    tc.seed = derive_seed(config.seed, kSeedTransform);
    const Transformer transformer = Transformer::fit(table, tc);

    TrainConfig train = config.train;
    train.seed = derive_seed(config.seed, kSeedTrain);
    const CtganModel model = train_ctgan(table, transformer, train);
    model.save(out);
    transformer.save(out + ".transformer.json");
    const auto& history = model.loss_history;
    std::cout << "trained " << history.size() << " steps";
    if (!history.empty()) {
        std::cout << "; final losses d=" << fmt(history.back().first) << " g="
                  << fmt(history.back().second);
    }
    std::cout << "\nwrote " << out << " and " << out << ".transformer.json\n";
    return kExitOk;
}

int run_generate(const PipelineConfig& config, const std::string& model_path,
                 const std::string& transformer_path, std::size_t n,
                 const std::optional<std::string>& stability,
                 const std::optional<std::string>& load_level, const std::string& out) {
    print_resolved(config);
    const CtganModel model = CtganModel::load(model_path);
    const Transformer transformer = load_model_transformer(model_path, transformer_path);
    GenerationCondition condition;
    condition.stability = stability;
    condition.load_level = load_level;
    const SampleTable table =
        generate_samples(model, transformer, n, condition, derive_seed(config.seed, kSeedGenerate));
    save_data_with_sidecar(table, out);
    std::cout << "wrote " << table.n_rows() << " generated samples to " << out << "\n";
    return kExitOk;
}

struct EvalArtifacts {
    std::optional<ProportionReport> stability_proportions;
    std::optional<ProportionReport> load_proportions;
    std::optional<DistanceReport> distances;
    std::vector<BenchmarkRow> downstream;
};

void write_artifacts(const EvalArtifacts& artifacts, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };
    if (artifacts.stability_proportions) {
        write_file(path("proportions_stability.csv"),
                   proportion_csv(*artifacts.stability_proportions));
        write_file(path("proportions_stability.txt"),
                   proportion_text(*artifacts.stability_proportions));
    }
    if (artifacts.load_proportions) {
        write_file(path("proportions_load.csv"), proportion_csv(*artifacts.load_proportions));
        write_file(path("proportions_load.txt"), proportion_text(*artifacts.load_proportions));
    }
    if (artifacts.distances) {
        write_file(path("distance.csv"), distance_csv(*artifacts.distances));
        write_file(path("distance.txt"), distance_text(*artifacts.distances));
    }
    if (!artifacts.downstream.empty()) {
        write_file(path("downstream.csv"), benchmark_csv(artifacts.downstream));
        write_file(path("downstream.txt"), benchmark_text(artifacts.downstream));
    }
}

int run_evaluate(const PipelineConfig& config, const std::string& real_path,
                 const std::string& model_path, const std::string& transformer_path,
                 const std::string& metric, const std::string& out_dir) {
    print_resolved(config);
    const SampleTable real = load_data_with_sidecar(real_path);
    const CtganModel model = CtganModel::load(model_path);
    const Transformer transformer = load_model_transformer(model_path, transformer_path);
    const std::uint64_t seed = derive_seed(config.seed, kSeedEvaluate);

    EvalArtifacts artifacts;
    if (metric == "proportions" || metric == "all") {
        const auto& schema = transformer.schema();
        const auto& stability_cats = schema[label_column(schema)].categories;
        artifacts.stability_proportions = conditional_proportion_report(
            model, transformer, config.eval.proportion_samples, "stability", stability_cats,
            derive_seed(seed, 1));
        std::vector<std::string> levels;
        for (const auto& col : schema) {
            if (col.role == ColumnRole::Condition) levels = col.categories;
        }
        artifacts.load_proportions = conditional_proportion_report(
            model, transformer, config.eval.proportion_samples, "load_level", levels,
            derive_seed(seed, 2));
    }
    if (metric == "distance" || metric == "all") {
        const std::size_t m = std::min(config.eval.distance_samples, real.n_rows() / 2);
        if (m < config.eval.distance_samples) {
            std::cout << "distance sample size clamped to " << m
                      << " (need disjoint real subsets)\n";
        }
        const SampleTable gen =
            generate_samples(model, transformer, m, {}, derive_seed(seed, 3));
        artifacts.distances = distance_report(real, gen, m, config.eval.pca_components,
                                              config.eval.bins, derive_seed(seed, 4));
    }
    if (metric == "downstream" || metric == "all") {
        const DatasetSplit split =
            split_dataset(real, config.eval.train_fraction, derive_seed(config.seed, kSeedSplit));
        const SampleTable gen = generate_samples(model, transformer, split.train.n_rows(), {},
                                                 derive_seed(seed, 5));
        BenchmarkConfig bc;
        bc.dt_max_depth = config.eval.dt_max_depth;
        bc.mlp.hidden = config.eval.mlp_hidden;
        bc.mlp.max_iter = config.eval.mlp_max_iter;
        bc.mlp.batch = config.eval.mlp_batch;
        artifacts.downstream =
            downstream_benchmark(split.train, gen, split.test, bc, derive_seed(seed, 6));
    }
    write_artifacts(artifacts, out_dir);
    std::cout << "wrote evaluation artifacts to " << out_dir << "\n";
    if (!artifacts.downstream.empty()) std::cout << benchmark_text(artifacts.downstream);
    return kExitOk;
}

int run_benchmark(const PipelineConfig& config, const std::string& real_path,
                  const std::string& model_path, const std::string& transformer_path,
                  const std::string& out_dir) {
    print_resolved(config);
    const SampleTable real = load_data_with_sidecar(real_path);
    const CtganModel model = CtganModel::load(model_path);
    const Transformer transformer = load_model_transformer(model_path, transformer_path);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "seed,model,dataset,recall_p,recall_n,f1,accuracy\n";
    for (std::size_t s = 0; s < config.eval.benchmark_seeds; ++s) {
        const std::uint64_t seed = derive_seed(config.seed, kSeedEvaluate + 100 + s);
        const DatasetSplit split =
            split_dataset(real, config.eval.train_fraction, derive_seed(seed, 1));
        const SampleTable gen = generate_samples(model, transformer, split.train.n_rows(), {},
                                                 derive_seed(seed, 2));
        BenchmarkConfig bc;
        bc.dt_max_depth = config.eval.dt_max_depth;
        bc.mlp.hidden = config.eval.mlp_hidden;
        bc.mlp.max_iter = config.eval.mlp_max_iter;
        bc.mlp.batch = config.eval.mlp_batch;
        const auto grid = downstream_benchmark(split.train, gen, split.test, bc,
                                               derive_seed(seed, 3));
        for (const auto& row : grid) {
            csv << s << "," << row.model << "," << row.dataset << ","
                << fmt(row.scores.recall_stable) << "," << fmt(row.scores.recall_unstable) << ","
                << fmt(row.scores.f1_stable) << "," << fmt(row.scores.accuracy) << "\n";
        }
        std::cout << "seed " << s << " done\n";
    }
    write_file((fs::path(out_dir) / "benchmark_seeds.csv").string(), csv.str());
    std::cout << "wrote " << (fs::path(out_dir) / "benchmark_seeds.csv").string() << "\n";
    return kExitOk;
}

int run_pipeline(const PipelineConfig& config) {
    print_resolved(config);
    if (config.paths.out_dir.empty()) throw ConfigError("pipeline requires paths.out_dir");
    fs::create_directories(config.paths.out_dir);
    const auto path = [&](const std::string& name) {
        return (fs::path(config.paths.out_dir) / name).string();
    };
    write_file(path("resolved_config.json"), dump_config(config) + "\n");

    const GridCase grid = load_grid_case(config.paths.grid_case);
    ScenarioConfig sim = config.simulate;
    sim.seed = derive_seed(config.seed, kSeedSimulate);
    std::cout << "[1/5] simulating " << config.simulate_n << " scenarios...\n";
    const SampleTable data = generate_dataset(grid, sim, config.simulate_n);
    save_data_with_sidecar(data, path("samples.csv"));

    std::cout << "[2/5] fitting transformer...\n";
    TransformConfig tc = config.transform;
    tc.seed = derive_seed(config.seed, kSeedTransform);
    const Transformer transformer = Transformer::fit(data, tc);
    transformer.save(path("transformer.json"));

    std::cout << "[3/5] training generator...\n";
    TrainConfig train = config.train;
    train.seed = derive_seed(config.seed, kSeedTrain);
    const CtganModel model = train_ctgan(data, transformer, train);
    model.save(path("model.bin"));
    transformer.save(path("model.bin.transformer.json"));

    std::cout << "[4/5] generating samples...\n";
    const DatasetSplit split =
        split_dataset(data, config.eval.train_fraction, derive_seed(config.seed, kSeedSplit));
    const SampleTable sgen = generate_samples(model, transformer, split.train.n_rows(), {},
                                              derive_seed(config.seed, kSeedGenerate));
    save_data_with_sidecar(sgen, path("sgen.csv"));

    std::cout << "[5/5] evaluating...\n";
    const std::uint64_t eval_seed = derive_seed(config.seed, kSeedEvaluate);
    EvalArtifacts artifacts;
    const auto& stability_cats = data.schema[label_column(data.schema)].categories;
    artifacts.stability_proportions =
        conditional_proportion_report(model, transformer, config.eval.proportion_samples,
                                      "stability", stability_cats, derive_seed(eval_seed, 1));
    std::vector<std::string> levels;
    for (const auto& col : data.schema) {
        if (col.role == ColumnRole::Condition) levels = col.categories;
    }
    artifacts.load_proportions =
        conditional_proportion_report(model, transformer, config.eval.proportion_samples,
                                      "load_level", levels, derive_seed(eval_seed, 2));
    const std::size_t m = std::min(config.eval.distance_samples, data.n_rows() / 2);
    const SampleTable gen_for_distance =
        generate_samples(model, transformer, m, {}, derive_seed(eval_seed, 3));
    artifacts.distances = distance_report(data, gen_for_distance, m, config.eval.pca_components,
                                          config.eval.bins, derive_seed(eval_seed, 4));
    BenchmarkConfig bc;
    bc.dt_max_depth = config.eval.dt_max_depth;
    bc.mlp.hidden = config.eval.mlp_hidden;
    bc.mlp.max_iter = config.eval.mlp_max_iter;
    bc.mlp.batch = config.eval.mlp_batch;
    artifacts.downstream =
        downstream_benchmark(split.train, sgen, split.test, bc, derive_seed(eval_seed, 6));
    write_artifacts(artifacts, config.paths.out_dir);

    std::cout << "pipeline complete; artifacts in " << config.paths.out_dir << "\n";
    std::cout << proportion_text(*artifacts.stability_proportions);
    std::cout << distance_text(*artifacts.distances);
    std::cout << benchmark_text(artifacts.downstream);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transient-stability sample generation toolkit"};
    app.require_subcommand(1);

    std::string config_path, case_path, data_path, model_path, transformer_path, out_path,
        real_path, metric = "all";
    std::optional<std::string> stability, load_level;
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::size_t> n_flag, epochs_flag;

    auto* simulate = app.add_subcommand("simulate", "generate labeled samples via time-domain simulation");
    simulate->add_option("--case", case_path, "grid case file");
    simulate->add_option("--n", n_flag, "number of samples");
    simulate->add_option("--seed", seed_flag, "master seed");
    simulate->add_option("--out", out_path, "output csv")->required();
    simulate->add_option("--config", config_path, "config file");

    auto* preprocess = app.add_subcommand("preprocess", "fit the mode-specific normalizer");
    preprocess->add_option("--data", data_path, "input csv (with .schema sidecar)")->required();
    preprocess->add_option("--out", out_path, "output transformer file")->required();
    preprocess->add_option("--seed", seed_flag, "master seed");
    preprocess->add_option("--config", config_path, "config file");

    auto* train = app.add_subcommand("train", "train the conditional generator");
    train->add_option("--data", data_path, "training csv (with .schema sidecar)")->required();
    train->add_option("--config", config_path, "config file");
    train->add_option("--out", out_path, "output model file")->required();
    train->add_option("--seed", seed_flag, "master seed");
    train->add_option("--epochs", epochs_flag, "override train.epochs");

    auto* generate = app.add_subcommand("generate", "sample from a trained generator");
    generate->add_option("--model", model_path, "model file")->required();
    generate->add_option("--transformer", transformer_path,
                         "transformer file (default <model>.transformer.json)");
    generate->add_option("--n", n_flag, "rows to generate")->required();
    generate->add_option("--stability", stability, "condition: stability category");
    generate->add_option("--load-level", load_level, "condition: load level category");
    generate->add_option("--seed", seed_flag, "master seed");
    generate->add_option("--out", out_path, "output csv")->required();
    generate->add_option("--config", config_path, "config file");

    auto* evaluate = app.add_subcommand("evaluate", "run the three-metric evaluation");
    evaluate->add_option("--real", real_path, "real samples csv")->required();
    evaluate->add_option("--model", model_path, "model file")->required();
    evaluate->add_option("--transformer", transformer_path, "transformer file");
    evaluate->add_option("--out", out_path, "output directory")->required();
    evaluate->add_option("--metric", metric, "proportions|distance|downstream|all")
        ->check(CLI::IsMember({"proportions", "distance", "downstream", "all"}));
    evaluate->add_option("--seed", seed_flag, "master seed");
    evaluate->add_option("--config", config_path, "config file");

    auto* benchmark = app.add_subcommand("benchmark", "multi-seed downstream benchmark");
    benchmark->add_option("--real", real_path, "real samples csv")->required();
    benchmark->add_option("--model", model_path, "model file")->required();
    benchmark->add_option("--transformer", transformer_path, "transformer file");
    benchmark->add_option("--out", out_path, "output directory")->required();
    benchmark->add_option("--seed", seed_flag, "master seed");
    benchmark->add_option("--config", config_path, "config file");

    auto* pipeline = app.add_subcommand("pipeline", "simulate, train, generate, evaluate");
    pipeline->add_option("--config", config_path, "config file")->required();
    pipeline->add_option("--seed", seed_flag, "master seed override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        PipelineConfig config = load_base_config(config_path);
        // Flags win over the config file.
        if (seed_flag) config.seed = *seed_flag;
        if (n_flag) config.simulate_n = *n_flag;
        if (epochs_flag) config.train.epochs = *epochs_flag;
        if (!case_path.empty()) config.paths.grid_case = case_path;
        config.validate();

        if (simulate->parsed()) {
            if (config.paths.grid_case.empty()) throw ConfigError("simulate requires --case");
            return run_simulate(config, out_path);
        }
        if (preprocess->parsed()) return run_preprocess(config, data_path, out_path);
        if (train->parsed()) return run_train(config, data_path, out_path);
        if (generate->parsed()) {
            return run_generate(config, model_path, transformer_path,
                                n_flag.value_or(config.eval.proportion_samples), stability,
                                load_level, out_path);
        }
        if (evaluate->parsed()) {
            return run_evaluate(config, real_path, model_path, transformer_path, metric, out_path);
        }
        if (benchmark->parsed()) {
            return run_benchmark(config, real_path, model_path, transformer_path, out_path);
        }
        if (pipeline->parsed()) return run_pipeline(config);
        throw ConfigError("no subcommand selected");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumericError;
    }
}
