#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsgen/dataset.hpp"
#include "tsgen/dynamics.hpp"
#include "tsgen/grid.hpp"

namespace tsgen {

struct ScenarioConfig {
    double load_scale_min = 0.60;
    double load_scale_max = 1.45;
    double fault_position_min = 0.20;
    double fault_position_max = 0.80;
    double clearing_time_min = 1.0 / 60.0;
    double clearing_time_max = 1.0 / 3.0;
    double horizon = 10.0;
    double step = 0.005;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError outside the documented ranges
};

struct SimResult {
    std::vector<double> features;  // |V|, angle per bus; P,Q per load; P,Q per generator
    StabilityLabel label = StabilityLabel::Stable;
    int load_level_index = 0;      // 0 -> 60%, 17 -> 145%
    std::size_t faulted_line = 0;
    double fault_position = 0.0;
    double clearing_time = 0.0;
    double load_scale = 1.0;
};

inline constexpr int kLoadLevelCount = 18;
std::string load_level_label(int index);  // "60%" ... "145%"
int load_level_bucket(double scale);

std::vector<std::string> feature_names(const GridCase& grid);
Schema dataset_schema(const GridCase& grid);

// One labeled scenario: draws load scale, fault line/position/clearing time,
// chains power flow -> model reduction -> swing integration -> labeling.
// Rejected draws (non-convergence, islanding, out-of-range snapshot) are
// resampled from the next derived seed; >100 consecutive rejections throws
// ConfigError.
SimResult run_scenario(const GridCase& grid, const ScenarioConfig& config,
                       std::uint64_t scenario_seed);

// n scenarios as a SampleTable. Per-scenario seeds depend only on
// (config.seed, row index), so the parallel and serial paths emit identical
// tables.
SampleTable generate_dataset(const GridCase& grid, const ScenarioConfig& config, std::size_t n);
SampleTable generate_dataset_serial(const GridCase& grid, const ScenarioConfig& config,
                                    std::size_t n);

}  // namespace tsgen
