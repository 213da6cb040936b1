#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tsgen {

enum class ColumnKind { Continuous, Categorical };
enum class ColumnRole { Feature, Condition, Label };

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    std::vector<std::string> categories;  // categorical only, order fixes the index
    std::string unit;                     // pu, rad, percent, ...
    ColumnRole role = ColumnRole::Feature;

    int category_index(const std::string& label) const;  // -1 when unknown
};

using Schema = std::vector<ColumnSchema>;

// Validates the per-column and per-schema invariants; throws DataError.
void validate_schema(const Schema& schema);
std::size_t label_column(const Schema& schema);
std::size_t column_index(const Schema& schema, const std::string& name);

// Mixed-kind rows stored as doubles: continuous cells hold the value,
// categorical cells hold the category index.
struct SampleTable {
    Schema schema;
    std::vector<std::vector<double>> rows;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return schema.size(); }
    void validate() const;  // throws DataError on any invariant violation
};

struct DatasetSplit {
    SampleTable train;
    SampleTable test;
    std::uint64_t seed = 0;
};

struct CategoryBalance {
    std::size_t count = 0;
    double proportion = 0.0;
};

// CSV with header; categorical cells carry category labels, continuous cells
// shortest round-trip decimals. A JSON sidecar (<path>.schema) describes the
// columns.
SampleTable load_table(const std::string& path, const Schema& schema);
void save_table(const SampleTable& table, const std::string& path);

void save_schema(const Schema& schema, const std::string& path);
Schema load_schema(const std::string& path);

// Fisher-Yates on row indices under the documented SplitMix64 stream;
// train size = round(train_fraction * N).
DatasetSplit split_dataset(const SampleTable& table, double train_fraction, std::uint64_t seed);

SampleTable union_datasets(const SampleTable& a, const SampleTable& b);

std::map<std::string, CategoryBalance> class_balance(const SampleTable& table,
                                                     const std::string& column);

}  // namespace tsgen
