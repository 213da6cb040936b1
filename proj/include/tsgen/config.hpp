#pragma once

#include <cstdint>
#include <string>

#include "tsgen/ctgan.hpp"
#include "tsgen/tds.hpp"
#include "tsgen/transform.hpp"

namespace tsgen {

struct PipelinePaths {
    std::string grid_case;
    std::string data;
    std::string transformer;
    std::string model;
    std::string out_dir;
};

struct EvalConfig {
    std::size_t proportion_samples = 2000;
    std::size_t distance_samples = 2000;
    std::size_t pca_components = 2;
    std::size_t bins = 20;
    int dt_max_depth = 100;
    std::size_t mlp_hidden = 200;
    std::size_t mlp_max_iter = 500;
    std::size_t mlp_batch = 200;
    double train_fraction = 0.6;
    std::size_t benchmark_seeds = 5;

    void validate() const;
};

// One file captures the whole experiment; module seeds are derived from the
// master seed at run time.
struct PipelineConfig {
    std::uint64_t seed = 0;
    PipelinePaths paths;
    std::size_t simulate_n = 3000;
    ScenarioConfig simulate;
    TransformConfig transform;
    TrainConfig train;
    EvalConfig eval;

    void validate() const;
};

// Strict parse: unknown keys are rejected with their path, wrong types and
// out-of-range values name the offending key. Omitted fields take the
// documented defaults.
PipelineConfig parse_config(const std::string& path);
PipelineConfig parse_config_text(const std::string& text, const std::string& origin);

// Resolved-config dump; parse(dump(c)) == c.
std::string dump_config(const PipelineConfig& config);

// Stable sub-seeds for the pipeline stages.
inline constexpr std::uint64_t kSeedSimulate = 0x51;
inline constexpr std::uint64_t kSeedTransform = 0x52;
inline constexpr std::uint64_t kSeedTrain = 0x53;
inline constexpr std::uint64_t kSeedGenerate = 0x54;
inline constexpr std::uint64_t kSeedEvaluate = 0x55;
inline constexpr std::uint64_t kSeedSplit = 0x56;

}  // namespace tsgen
