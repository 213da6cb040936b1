#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsgen/ctgan.hpp"
#include "tsgen/dataset.hpp"
#include "tsgen/metrics.hpp"
#include "tsgen/mlp.hpp"
#include "tsgen/transform.hpp"
#include "tsgen/tree.hpp"

namespace tsgen {

// Conditional-generation effect: per setting, the emitted category
// proportions of the watched column, against the unconditioned baseline.
struct ProportionEntry {
    std::string setting;  // "none" or the conditioned category
    std::vector<double> proportions;
    double conditioned_proportion = 0.0;  // of the requested category
    double baseline_proportion = 0.0;
    double improvement = 0.0;  // (conditioned - baseline) / baseline
};

struct ProportionReport {
    std::string column;
    std::vector<std::string> categories;
    std::vector<ProportionEntry> entries;  // "none" first
};

ProportionReport conditional_proportion_report(const CtganModel& model,
                                               const Transformer& transformer,
                                               std::size_t n_per_setting,
                                               const std::string& column,
                                               const std::vector<std::string>& settings,
                                               std::uint64_t seed);

struct DistancePair {
    std::string name;  // "real-real" or "real-generated"
    DistanceTriple distances;
};

struct DistanceReport {
    std::vector<DistancePair> pairs;
    std::size_t sample_size = 0;
    std::size_t pca_components = 0;
    std::size_t bins = 0;
};

// Draws disjoint real subsets A and B of size m, an m-row generated subset,
// then runs pca -> binning -> divergences for (A,B) and (A,gen).
DistanceReport distance_report(const SampleTable& real, const SampleTable& generated,
                               std::size_t m, std::size_t pca_k, std::size_t bins,
                               std::uint64_t seed);

struct ClassifierScores {
    double recall_stable = 0.0;    // Recall_P
    double recall_unstable = 0.0;  // Recall_N
    double f1_stable = 0.0;
    double accuracy = 0.0;
    bool recall_stable_defined = true;
    bool recall_unstable_defined = true;
};

ClassifierScores classification_report(const std::vector<int>& predictions,
                                       const SampleTable& test);

struct BenchmarkConfig {
    int dt_max_depth = 100;
    MlpConfig mlp;
};

struct BenchmarkRow {
    std::string model;    // "DT" or "MLP"
    std::string dataset;  // "train", "gen", "union"
    ClassifierScores scores;
};

// Trains DT and MLP on each of train/gen/union and scores them on test:
// the six-row grid.
std::vector<BenchmarkRow> downstream_benchmark(const SampleTable& train, const SampleTable& gen,
                                               const SampleTable& test,
                                               const BenchmarkConfig& config,
                                               std::uint64_t seed);

}  // namespace tsgen
