#include "tsgen/evaluate.hpp"

#include <algorithm>
#include <numeric>

#include "tsgen/errors.hpp"
#include "tsgen/pca.hpp"
#include "tsgen/rng.hpp"

namespace tsgen {

ProportionReport conditional_proportion_report(const CtganModel& model,
                                               const Transformer& transformer,
                                               std::size_t n_per_setting,
                                               const std::string& column,
                                               const std::vector<std::string>& settings,
                                               std::uint64_t seed) {
    if (n_per_setting == 0) throw ConfigError("proportion report needs n > 0 per setting");
    const std::size_t col = column_index(transformer.schema(), column);
    const auto& schema_col = transformer.schema()[col];
    if (schema_col.kind != ColumnKind::Categorical) {
        throw DataError("proportion report column must be categorical");
    }
    const bool is_label = schema_col.role == ColumnRole::Label;
    if (!is_label && schema_col.role != ColumnRole::Condition) {
        throw DataError("proportion report column must be a condition or the label");
    }

    ProportionReport report;
    report.column = column;
    report.categories = schema_col.categories;

    const auto proportions_for = [&](const GenerationCondition& condition,
                                     std::uint64_t setting_seed) {
        const auto table =
            generate_samples(model, transformer, n_per_setting, condition, setting_seed);
        std::vector<double> props(schema_col.categories.size(), 0.0);
        for (const auto& row : table.rows) {
            props[static_cast<std::size_t>(row[col])] += 1.0;
        }
        for (auto& p : props) p /= static_cast<double>(table.n_rows());
        return props;
    };

    ProportionEntry baseline;
    baseline.setting = "none";
    baseline.proportions = proportions_for({}, derive_seed(seed, 0));
    report.entries.push_back(baseline);

    std::uint64_t idx = 1;
    for (const auto& setting : settings) {
        const int cat = schema_col.category_index(setting);
        if (cat < 0) throw DataError("unknown category '" + setting + "' in proportion report");
        GenerationCondition condition;
        (is_label ? condition.stability : condition.load_level) = setting;
        ProportionEntry entry;
        entry.setting = setting;
        entry.proportions = proportions_for(condition, derive_seed(seed, idx++));
        entry.conditioned_proportion = entry.proportions[static_cast<std::size_t>(cat)];
        entry.baseline_proportion = baseline.proportions[static_cast<std::size_t>(cat)];
        entry.improvement = entry.baseline_proportion > 0.0
                                ? (entry.conditioned_proportion - entry.baseline_proportion) /
                                      entry.baseline_proportion
                                : 0.0;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

namespace {

SampleTable take_rows(const SampleTable& source, const std::vector<std::size_t>& indices,
                      std::size_t start, std::size_t count) {
    SampleTable out;
    out.schema = source.schema;
    for (std::size_t i = 0; i < count; ++i) {
        out.rows.push_back(source.rows[indices[start + i]]);
    }
    return out;
}

}  // namespace

DistanceReport distance_report(const SampleTable& real, const SampleTable& generated,
                               std::size_t m, std::size_t pca_k, std::size_t bins,
                               std::uint64_t seed) {
    if (real.n_rows() < 2 * m) {
        throw DataError("distance report needs at least 2m real rows for disjoint subsets");
    }
    if (generated.n_rows() < m) throw DataError("distance report needs at least m generated rows");

    Rng rng(seed);
    std::vector<std::size_t> real_idx(real.n_rows());
    std::iota(real_idx.begin(), real_idx.end(), 0);
    rng.shuffle(real_idx);
    const SampleTable set_a = take_rows(real, real_idx, 0, m);
    const SampleTable set_b = take_rows(real, real_idx, m, m);

    std::vector<std::size_t> gen_idx(generated.n_rows());
    std::iota(gen_idx.begin(), gen_idx.end(), 0);
    rng.shuffle(gen_idx);
    const SampleTable set_gen = take_rows(generated, gen_idx, 0, m);

    const auto projected = pca_project(set_a, {&set_b, &set_gen}, pca_k);
    const GridBounds bounds = grid_bounds(projected[0]);
    const GridHistogram hist_a = bin_histogram(projected[0], bins, bounds);
    const GridHistogram hist_b = bin_histogram(projected[1], bins, bounds);
    const GridHistogram hist_g = bin_histogram(projected[2], bins, bounds);

    DistanceReport report;
    report.sample_size = m;
    report.pca_components = pca_k;
    report.bins = bins;
    report.pairs.push_back({"real-real", histogram_distances(hist_a, hist_b)});
    report.pairs.push_back({"real-generated", histogram_distances(hist_a, hist_g)});
    return report;
}

ClassifierScores classification_report(const std::vector<int>& predictions,
                                       const SampleTable& test) {
    if (predictions.size() != test.n_rows()) {
        throw DataError("classification report: prediction count mismatch");
    }
    if (test.rows.empty()) throw DataError("classification report: empty test set");
    const std::size_t label = label_column(test.schema);
    // Category 0 is the stable (positive) class by schema construction.
    std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
    for (std::size_t r = 0; r < test.n_rows(); ++r) {
        const bool actual_stable = test.rows[r][label] == 0.0;
        const bool predicted_stable = predictions[r] == 0;
        if (actual_stable && predicted_stable) ++tp;
        if (actual_stable && !predicted_stable) ++fn;
        if (!actual_stable && predicted_stable) ++fp;
        if (!actual_stable && !predicted_stable) ++tn;
    }
    ClassifierScores s;
    const std::size_t n_stable = tp + fn;
    const std::size_t n_unstable = fp + tn;
    s.recall_stable_defined = n_stable > 0;
    s.recall_unstable_defined = n_unstable > 0;
    s.recall_stable = n_stable ? static_cast<double>(tp) / static_cast<double>(n_stable) : 0.0;
    s.recall_unstable =
        n_unstable ? static_cast<double>(tn) / static_cast<double>(n_unstable) : 0.0;
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.f1_stable = precision + s.recall_stable > 0.0
                      ? 2.0 * precision * s.recall_stable / (precision + s.recall_stable)
                      : 0.0;
    s.accuracy = static_cast<double>(tp + tn) / static_cast<double>(test.n_rows());
    return s;
}

std::vector<BenchmarkRow> downstream_benchmark(const SampleTable& train, const SampleTable& gen,
                                               const SampleTable& test,
                                               const BenchmarkConfig& config,
                                               std::uint64_t seed) {
    const SampleTable united = union_datasets(train, gen);
    const std::vector<std::pair<std::string, const SampleTable*>> datasets = {
        {"train", &train}, {"gen", &gen}, {"union", &united}};

    std::vector<BenchmarkRow> grid;
    for (const auto& [name, data] : datasets) {
        const DecisionTree tree = fit_decision_tree(*data, config.dt_max_depth);
        grid.push_back({"DT", name, classification_report(tree_predict_table(tree, test), test)});
    }
    std::uint64_t idx = 0;
    for (const auto& [name, data] : datasets) {
        MlpConfig mlp_config = config.mlp;
        mlp_config.seed = derive_seed(seed, idx++);
        const MlpClassifier mlp = fit_mlp_classifier(*data, mlp_config);
        grid.push_back({"MLP", name, classification_report(mlp_predict_table(mlp, test), test)});
    }
    return grid;
}

}  // namespace tsgen
