#include "tsgen/transform.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>

#include <json.hpp>

#include "tsgen/errors.hpp"

namespace tsgen {

using json = nlohmann::json;

void Transformer::build_layout() {
    blocks_.clear();
    std::size_t offset = 0;
    for (std::size_t c = 0; c < schema_.size(); ++c) {
        if (schema_[c].kind != ColumnKind::Continuous) continue;
        ColumnBlock b;
        b.column = c;
        b.continuous = true;
        b.offset = offset;
        b.size = 1 + models_[c].n_modes();
        offset += b.size;
        blocks_.push_back(b);
    }
    for (std::size_t c = 0; c < schema_.size(); ++c) {
        if (schema_[c].kind != ColumnKind::Categorical) continue;
        ColumnBlock b;
        b.column = c;
        b.continuous = false;
        b.offset = offset;
        b.size = schema_[c].categories.size();
        offset += b.size;
        blocks_.push_back(b);
    }
    encoded_width_ = offset;

    // Condition layout: label block first, then condition columns in order.
    condition_blocks_.clear();
    std::size_t cond_offset = 0;
    const auto add_cond = [&](std::size_t column) {
        ConditionBlock b;
        b.column = column;
        b.offset = cond_offset;
        b.size = schema_[column].categories.size();
        cond_offset += b.size;
        condition_blocks_.push_back(b);
    };
    add_cond(label_column(schema_));
    for (std::size_t c = 0; c < schema_.size(); ++c) {
        if (schema_[c].role == ColumnRole::Condition) add_cond(c);
    }
    condition_dim_ = cond_offset;

    condition_targets_.clear();
    for (const auto& cb : condition_blocks_) {
        for (const auto& b : blocks_) {
            if (b.column == cb.column) {
                condition_targets_.push_back({b.offset, cb.offset, cb.size});
                break;
            }
        }
    }
}

Transformer Transformer::fit_impl(const SampleTable& table, const TransformConfig& config,
                                  bool parallel) {
    table.validate();
    if (table.rows.empty()) throw DataError("cannot fit a transformer on an empty table");

    Transformer t;
    t.schema_ = table.schema;
    t.models_.resize(table.schema.size());

    std::vector<std::size_t> cont_cols;
    for (std::size_t c = 0; c < table.schema.size(); ++c) {
        if (table.schema[c].kind == ColumnKind::Continuous) cont_cols.push_back(c);
    }

    const auto fit_column = [&](std::size_t c) {
        std::vector<double> values(table.n_rows());
        for (std::size_t r = 0; r < table.n_rows(); ++r) values[r] = table.rows[r][c];
        t.models_[c] = fit_vgm(values, config.max_modes, config.weight_threshold,
                               derive_seed(config.seed, c));
        t.models_[c].column = table.schema[c].name;
    };

    if (parallel) {
        std::exception_ptr error = nullptr;
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(cont_cols.size()); ++i) {
            try {
                fit_column(cont_cols[static_cast<std::size_t>(i)]);
            } catch (...) {
#pragma omp critical
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else {
        for (const std::size_t c : cont_cols) fit_column(c);
    }

    t.build_layout();

    // Category counts per condition block, for training-by-sampling and the
    // generation-time condition draw.
    t.counts_.assign(t.condition_blocks_.size(), {});
    for (std::size_t b = 0; b < t.condition_blocks_.size(); ++b) {
        t.counts_[b].assign(t.condition_blocks_[b].size, 0);
        for (const auto& row : table.rows) {
            const auto cat = static_cast<std::size_t>(row[t.condition_blocks_[b].column]);
            t.counts_[b][cat] += 1;
        }
    }
    return t;
}

Transformer Transformer::fit(const SampleTable& table, const TransformConfig& config) {
    return fit_impl(table, config, true);
}

Transformer Transformer::fit_serial(const SampleTable& table, const TransformConfig& config) {
    return fit_impl(table, config, false);
}

const GmmColumnModel& Transformer::column_model(std::size_t schema_column) const {
    if (schema_column >= models_.size() ||
        schema_[schema_column].kind != ColumnKind::Continuous) {
        throw DataError("no fitted model for column index " + std::to_string(schema_column));
    }
    return models_[schema_column];
}

Eigen::VectorXd Transformer::encode_row(const std::vector<double>& row) const {
    if (row.size() != schema_.size()) throw DataError("encode_row: row width mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(encoded_width_));
    for (const auto& b : blocks_) {
        const double v = row[b.column];
        if (b.continuous) {
            const auto nv = normalize_value(models_[b.column], v);
            out(static_cast<Eigen::Index>(b.offset)) = nv.beta;
            out(static_cast<Eigen::Index>(b.offset + 1 + nv.mode)) = 1.0;
        } else {
            out(static_cast<Eigen::Index>(b.offset + static_cast<std::size_t>(v))) = 1.0;
        }
    }
    return out;
}

std::vector<double> Transformer::decode_row(const Eigen::VectorXd& encoded) const {
    if (encoded.size() != static_cast<Eigen::Index>(encoded_width_)) {
        throw DataError("decode_row: encoded width mismatch");
    }
    std::vector<double> row(schema_.size(), 0.0);
    for (const auto& b : blocks_) {
        if (b.continuous) {
            const auto base = static_cast<Eigen::Index>(b.offset);
            std::size_t mode = 0;
            for (std::size_t i = 1; i < b.size - 1; ++i) {
                if (encoded(base + 1 + static_cast<Eigen::Index>(i)) >
                    encoded(base + 1 + static_cast<Eigen::Index>(mode))) {
                    mode = i;
                }
            }
            const double beta = std::clamp(encoded(base), -1.0, 1.0);
            row[b.column] = denormalize_value(models_[b.column], {mode, beta});
        } else {
            const auto base = static_cast<Eigen::Index>(b.offset);
            std::size_t cat = 0;
            for (std::size_t i = 1; i < b.size; ++i) {
                if (encoded(base + static_cast<Eigen::Index>(i)) >
                    encoded(base + static_cast<Eigen::Index>(cat))) {
                    cat = i;
                }
            }
            row[b.column] = static_cast<double>(cat);
        }
    }
    return row;
}

Eigen::MatrixXd Transformer::encode_table(const SampleTable& table) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(encoded_width_),
                        static_cast<Eigen::Index>(table.n_rows()));
    std::exception_ptr error = nullptr;
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < static_cast<long long>(table.n_rows()); ++r) {
        try {
            out.col(static_cast<Eigen::Index>(r)) = encode_row(table.rows[static_cast<std::size_t>(r)]);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

Eigen::MatrixXd Transformer::encode_table_serial(const SampleTable& table) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(encoded_width_),
                        static_cast<Eigen::Index>(table.n_rows()));
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        out.col(static_cast<Eigen::Index>(r)) = encode_row(table.rows[r]);
    }
    return out;
}

SampleTable Transformer::decode_table(const Eigen::MatrixXd& encoded) const {
    SampleTable t;
    t.schema = schema_;
    t.rows.resize(static_cast<std::size_t>(encoded.cols()));
    std::exception_ptr error = nullptr;
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < encoded.cols(); ++c) {
        try {
            t.rows[static_cast<std::size_t>(c)] = decode_row(encoded.col(c));
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return t;
}

Eigen::VectorXd Transformer::build_cond_vector(std::size_t stability_index,
                                               std::size_t load_level_index) const {
    if (condition_blocks_.size() != 2) {
        throw DataError("condition layout does not have the stability+load structure");
    }
    const std::size_t indices[2] = {stability_index, load_level_index};
    Eigen::VectorXd cond = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(condition_dim_));
    for (std::size_t b = 0; b < 2; ++b) {
        if (indices[b] >= condition_blocks_[b].size) {
            throw DataError("condition category index out of range");
        }
        cond(static_cast<Eigen::Index>(condition_blocks_[b].offset + indices[b])) = 1.0;
    }
    return cond;
}

Eigen::VectorXd Transformer::build_cond_vector(const std::string& stability,
                                               const std::string& load_level) const {
    if (condition_blocks_.size() != 2) {
        throw DataError("condition layout does not have the stability+load structure");
    }
    const auto& label_col = schema_[condition_blocks_[0].column];
    const auto& level_col = schema_[condition_blocks_[1].column];
    const int si = label_col.category_index(stability);
    const int li = level_col.category_index(load_level);
    if (si < 0) throw DataError("unknown stability category '" + stability + "'");
    if (li < 0) throw DataError("unknown load level category '" + load_level + "'");
    return build_cond_vector(static_cast<std::size_t>(si), static_cast<std::size_t>(li));
}

std::uint64_t Transformer::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto mix_bytes = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    const auto mix_string = [&](const std::string& s) { mix_bytes(s.data(), s.size()); };
    const auto mix_double = [&](double v) { mix_bytes(&v, sizeof v); };

    for (const auto& col : schema_) {
        mix_string(col.name);
        mix_string(col.kind == ColumnKind::Continuous ? "|c" : "|k");
        for (const auto& cat : col.categories) mix_string(";" + cat);
    }
    for (const auto& b : blocks_) {
        mix_string(std::to_string(b.column) + ":" + std::to_string(b.offset) + ":" +
                   std::to_string(b.size));
        // Mode parameters matter too: a refit with the same layout but other
        // modes would silently decode to different values.
        if (b.continuous) {
            for (const auto& mode : models_[b.column].modes) {
                mix_double(mode.weight);
                mix_double(mode.mean);
                mix_double(mode.std_dev);
            }
        }
    }
    return h;
}

void Transformer::save(const std::string& path) const {
    json j;
    j["type"] = "tsgen-transformer";
    j["version"] = 1;
    json cols = json::array();
    for (const auto& col : schema_) {
        json jc;
        jc["name"] = col.name;
        jc["kind"] = col.kind == ColumnKind::Continuous ? "continuous" : "categorical";
        if (col.kind == ColumnKind::Categorical) jc["categories"] = col.categories;
        jc["unit"] = col.unit;
        jc["role"] = col.role == ColumnRole::Feature     ? "feature"
                     : col.role == ColumnRole::Condition ? "condition"
                                                         : "label";
        if (col.kind == ColumnKind::Continuous) {
            json modes = json::array();
            for (const auto& m : models_[column_index(schema_, col.name)].modes) {
                modes.push_back({{"weight", m.weight}, {"mean", m.mean}, {"std", m.std_dev}});
            }
            jc["modes"] = std::move(modes);
        }
        cols.push_back(std::move(jc));
    }
    j["columns"] = std::move(cols);
    j["counts"] = counts_;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write transformer '" + path + "'");
    out << j.dump(1) << '\n';
}

Transformer Transformer::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open transformer '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("transformer '" + path + "': " + e.what());
    }
    if (j.value("type", "") != "tsgen-transformer") {
        throw DataError("'" + path + "' is not a transformer file");
    }

    Transformer t;
    for (const auto& jc : j.at("columns")) {
        ColumnSchema col;
        col.name = jc.at("name").get<std::string>();
        col.kind = jc.at("kind").get<std::string>() == "continuous" ? ColumnKind::Continuous
                                                                    : ColumnKind::Categorical;
        if (col.kind == ColumnKind::Categorical) {
            col.categories = jc.at("categories").get<std::vector<std::string>>();
        }
        col.unit = jc.value("unit", "");
        const auto role = jc.value("role", "feature");
        col.role = role == "condition" ? ColumnRole::Condition
                   : role == "label"   ? ColumnRole::Label
                                       : ColumnRole::Feature;
        t.schema_.push_back(col);

        GmmColumnModel model;
        model.column = col.name;
        if (col.kind == ColumnKind::Continuous) {
            for (const auto& jm : jc.at("modes")) {
                model.modes.push_back({jm.at("weight").get<double>(), jm.at("mean").get<double>(),
                                       jm.at("std").get<double>()});
            }
        }
        t.models_.push_back(std::move(model));
    }
    validate_schema(t.schema_);
    t.build_layout();
    t.counts_ = j.at("counts").get<std::vector<std::vector<std::size_t>>>();
    if (t.counts_.size() != t.condition_blocks_.size()) {
        throw DataError("transformer '" + path + "': counts do not match condition layout");
    }
    return t;
}

TrainingSampler::TrainingSampler(const SampleTable& table, const Transformer& transformer)
    : transformer_(&transformer) {
    const auto& cblocks = transformer.condition_blocks();
    rows_by_category_.resize(cblocks.size());
    log_weights_.resize(cblocks.size());
    raw_weights_.resize(cblocks.size());
    row_categories_.assign(table.n_rows(), std::vector<std::size_t>(cblocks.size(), 0));
    for (std::size_t b = 0; b < cblocks.size(); ++b) {
        rows_by_category_[b].assign(cblocks[b].size, {});
        log_weights_[b].assign(cblocks[b].size, 0.0);
        raw_weights_[b].assign(cblocks[b].size, 0.0);
        for (std::size_t r = 0; r < table.n_rows(); ++r) {
            const auto cat = static_cast<std::size_t>(table.rows[r][cblocks[b].column]);
            rows_by_category_[b][cat].push_back(r);
            row_categories_[r][b] = cat;
        }
        for (std::size_t cat = 0; cat < cblocks[b].size; ++cat) {
            const double n = static_cast<double>(rows_by_category_[b][cat].size());
            log_weights_[b][cat] = std::log1p(n);
            raw_weights_[b][cat] = n;
        }
    }
}

namespace {

std::size_t weighted_pick(const std::vector<double>& weights, Rng& rng) {
    double total = 0.0;
    for (const double w : weights) total += w;
    if (total <= 0.0) throw DataError("condition sampling over an empty table");
    double target = rng.uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        target -= weights[i];
        if (target <= 0.0) return i;
    }
    return weights.size() - 1;
}

}  // namespace

TrainingSampler::Draw TrainingSampler::sample(Rng& rng) const {
    const auto& cblocks = transformer_->condition_blocks();
    const std::size_t block = static_cast<std::size_t>(rng.below(cblocks.size()));
    const std::size_t cat = weighted_pick(log_weights_[block], rng);
    const auto& rows = rows_by_category_[block][cat];
    const std::size_t row = rows[rng.below(rows.size())];

    Eigen::VectorXd cond =
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(transformer_->condition_dim()));
    for (std::size_t b = 0; b < cblocks.size(); ++b) {
        const std::size_t c = (b == block) ? cat : row_categories_[row][b];
        cond(static_cast<Eigen::Index>(cblocks[b].offset + c)) = 1.0;
    }
    return {std::move(cond), row};
}

std::size_t TrainingSampler::sample_block_category(std::size_t block, Rng& rng) const {
    const auto& weights = rng.uniform() < 0.5 ? log_weights_[block] : raw_weights_[block];
    return weighted_pick(weights, rng);
}

std::pair<Eigen::VectorXd, std::size_t> sample_training_condition(const SampleTable& table,
                                                                  const Transformer& transformer,
                                                                  std::uint64_t seed) {
    const TrainingSampler sampler(table, transformer);
    Rng rng(seed);
    auto draw = sampler.sample(rng);
    return {std::move(draw.cond), draw.row};
}

}  // namespace tsgen
