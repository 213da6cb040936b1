#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsgen/dataset.hpp"
#include "tsgen/gmm.hpp"
#include "tsgen/rng.hpp"

namespace tsgen {

// One encoded block: [beta, mode one-hot] for a continuous column, a plain
// one-hot for a categorical column. Continuous blocks come first in schema
// order, then the categorical blocks.
struct ColumnBlock {
    std::size_t column = 0;  // schema index
    bool continuous = true;
    std::size_t offset = 0;  // start inside the encoded row
    std::size_t size = 0;    // 1 + n_modes, or n_categories
};

// Condition layout per Eq-style concatenation: the stability (label) block
// first, then one block per condition column in schema order.
struct ConditionBlock {
    std::size_t column = 0;
    std::size_t offset = 0;  // start inside the condition vector
    std::size_t size = 0;
};

struct TransformConfig {
    std::size_t max_modes = 10;
    double weight_threshold = 0.005;
    std::uint64_t seed = 0;
};

class Transformer {
public:
    static Transformer fit(const SampleTable& table, const TransformConfig& config);
    static Transformer fit_serial(const SampleTable& table, const TransformConfig& config);

    const Schema& schema() const { return schema_; }
    std::size_t encoded_width() const { return encoded_width_; }
    std::size_t condition_dim() const { return condition_dim_; }
    const std::vector<ColumnBlock>& blocks() const { return blocks_; }
    const std::vector<ConditionBlock>& condition_blocks() const { return condition_blocks_; }
    const GmmColumnModel& column_model(std::size_t schema_column) const;
    const std::vector<std::vector<std::size_t>>& category_counts() const { return counts_; }

    Eigen::VectorXd encode_row(const std::vector<double>& row) const;
    std::vector<double> decode_row(const Eigen::VectorXd& encoded) const;

    // Samples as columns (width x n), the layout the nets consume.
    Eigen::MatrixXd encode_table(const SampleTable& table) const;
    Eigen::MatrixXd encode_table_serial(const SampleTable& table) const;
    SampleTable decode_table(const Eigen::MatrixXd& encoded) const;

    // Condition vector with one indicator per block.
    Eigen::VectorXd build_cond_vector(const std::string& stability,
                                      const std::string& load_level) const;
    Eigen::VectorXd build_cond_vector(std::size_t stability_index,
                                      std::size_t load_level_index) const;

    // Condition-block slices of an encoded row (for the generator's
    // condition loss): returns per condition block the encoded offset.
    struct CondTarget {
        std::size_t encoded_offset;
        std::size_t cond_offset;
        std::size_t size;
    };
    const std::vector<CondTarget>& condition_targets() const { return condition_targets_; }

    // FNV-1a over the layout; generation refuses mismatched transformers.
    std::uint64_t fingerprint() const;

    void save(const std::string& path) const;
    static Transformer load(const std::string& path);

private:
    Schema schema_;
    std::vector<GmmColumnModel> models_;  // indexed by schema column; empty for categorical
    std::vector<ColumnBlock> blocks_;
    std::vector<ConditionBlock> condition_blocks_;
    std::vector<CondTarget> condition_targets_;
    std::vector<std::vector<std::size_t>> counts_;  // per condition block, per category
    std::size_t encoded_width_ = 0;
    std::size_t condition_dim_ = 0;

    void build_layout();
    static Transformer fit_impl(const SampleTable& table, const TransformConfig& config,
                                bool parallel);
};

// Training-by-sampling: picks a condition block uniformly, a category inside
// it with probability proportional to log(1 + count), then a uniformly random
// row carrying that category. The returned condition vector has every block
// set (the other blocks read from the matched row).
class TrainingSampler {
public:
    TrainingSampler(const SampleTable& table, const Transformer& transformer);

    struct Draw {
        Eigen::VectorXd cond;
        std::size_t row = 0;
    };
    Draw sample(Rng& rng) const;

    // Draw for generation when a block is left unspecified: a fair coin
    // between the log-frequency weighting and the raw data frequency, the
    // same marginal the generator saw in training.
    std::size_t sample_block_category(std::size_t block, Rng& rng) const;

private:
    const Transformer* transformer_;
    std::vector<std::vector<std::vector<std::size_t>>> rows_by_category_;  // block, cat, rows
    std::vector<std::vector<double>> log_weights_;                         // block, cat
    std::vector<std::vector<double>> raw_weights_;
    std::vector<std::vector<std::size_t>> row_categories_;  // row, block
};

// Single-draw convenience mirroring the sampler contract.
std::pair<Eigen::VectorXd, std::size_t> sample_training_condition(const SampleTable& table,
                                                                  const Transformer& transformer,
                                                                  std::uint64_t seed);

}  // namespace tsgen
