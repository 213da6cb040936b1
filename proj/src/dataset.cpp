#include "tsgen/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tsgen/errors.hpp"
#include "tsgen/rng.hpp"

namespace tsgen {

using json = nlohmann::json;

int ColumnSchema::category_index(const std::string& label) const {
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (categories[i] == label) return static_cast<int>(i);
    }
    return -1;
}

void validate_schema(const Schema& schema) {
    std::set<std::string> names;
    std::size_t labels = 0;
    for (const auto& col : schema) {
        if (!names.insert(col.name).second) {
            throw DataError("duplicate column name '" + col.name + "'");
        }
        if (col.kind == ColumnKind::Categorical && col.categories.size() < 2) {
            throw DataError("categorical column '" + col.name + "' needs >= 2 categories");
        }
        if (col.role == ColumnRole::Label) ++labels;
        if (col.role == ColumnRole::Condition && col.kind != ColumnKind::Categorical) {
            throw DataError("condition column '" + col.name + "' must be categorical");
        }
    }
    if (labels != 1) {
        throw DataError("schema must contain exactly one label column, found " +
                        std::to_string(labels));
    }
}

std::size_t label_column(const Schema& schema) {
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].role == ColumnRole::Label) return i;
    }
    throw DataError("schema has no label column");
}

std::size_t column_index(const Schema& schema, const std::string& name) {
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].name == name) return i;
    }
    throw DataError("unknown column '" + name + "'");
}

void SampleTable::validate() const {
    validate_schema(schema);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != schema.size()) {
            throw DataError("row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                            " cells, schema has " + std::to_string(schema.size()));
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (schema[c].kind == ColumnKind::Continuous) {
                if (!std::isfinite(row[c])) {
                    throw DataError("non-finite value at row " + std::to_string(r) + ", column '" +
                                    schema[c].name + "'");
                }
            } else {
                const double v = row[c];
                if (v != std::floor(v) || v < 0 ||
                    v >= static_cast<double>(schema[c].categories.size())) {
                    throw DataError("invalid category index at row " + std::to_string(r) +
                                    ", column '" + schema[c].name + "'");
                }
            }
        }
    }
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

SampleTable load_table(const std::string& path, const Schema& schema) {
    validate_schema(schema);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "' is empty, expected a header");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv_line(line);
    if (header.size() != schema.size()) {
        throw DataError("'" + path + "': header has " + std::to_string(header.size()) +
                        " columns, schema has " + std::to_string(schema.size()));
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (header[c] != schema[c].name) {
            throw DataError("'" + path + "': header column " + std::to_string(c + 1) + " is '" +
                            header[c] + "', expected '" + schema[c].name + "'");
        }
    }

    SampleTable table;
    table.schema = schema;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != schema.size()) {
            throw DataError("'" + path + "' line " + std::to_string(row_no) + ": expected " +
                            std::to_string(schema.size()) + " cells, got " +
                            std::to_string(cells.size()));
        }
        std::vector<double> row(schema.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (schema[c].kind == ColumnKind::Continuous) {
                double v = 0.0;
                const char* first = cells[c].data();
                const char* last = first + cells[c].size();
                auto res = std::from_chars(first, last, v);
                if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
                    throw DataError("'" + path + "' line " + std::to_string(row_no) +
                                    ", column '" + schema[c].name + "': not a finite number: '" +
                                    cells[c] + "'");
                }
                row[c] = v;
            } else {
                const int idx = schema[c].category_index(cells[c]);
                if (idx < 0) {
                    throw DataError("'" + path + "' line " + std::to_string(row_no) +
                                    ", column '" + schema[c].name + "': unknown category '" +
                                    cells[c] + "'");
                }
                row[c] = static_cast<double>(idx);
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void save_table(const SampleTable& table, const std::string& path) {
    table.validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");

    for (std::size_t c = 0; c < table.schema.size(); ++c) {
        if (c) out << ',';
        out << table.schema[c].name;
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            if (table.schema[c].kind == ColumnKind::Continuous) {
                out << format_double(row[c]);
            } else {
                out << table.schema[c].categories[static_cast<std::size_t>(row[c])];
            }
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

void save_schema(const Schema& schema, const std::string& path) {
    json cols = json::array();
    for (const auto& col : schema) {
        json j;
        j["name"] = col.name;
        j["kind"] = col.kind == ColumnKind::Continuous ? "continuous" : "categorical";
        if (col.kind == ColumnKind::Categorical) j["categories"] = col.categories;
        j["unit"] = col.unit;
        j["role"] = col.role == ColumnRole::Feature     ? "feature"
                    : col.role == ColumnRole::Condition ? "condition"
                                                        : "label";
        cols.push_back(std::move(j));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << json{{"columns", cols}}.dump(2) << '\n';
}

Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("schema '" + path + "': " + e.what());
    }
    Schema schema;
    for (const auto& jc : j.at("columns")) {
        ColumnSchema col;
        col.name = jc.at("name").get<std::string>();
        const auto kind = jc.at("kind").get<std::string>();
        if (kind == "continuous") {
            col.kind = ColumnKind::Continuous;
        } else if (kind == "categorical") {
            col.kind = ColumnKind::Categorical;
            col.categories = jc.at("categories").get<std::vector<std::string>>();
        } else {
            throw DataError("schema '" + path + "': unknown kind '" + kind + "'");
        }
        col.unit = jc.value("unit", "");
        const auto role = jc.value("role", "feature");
        if (role == "feature") {
            col.role = ColumnRole::Feature;
        } else if (role == "condition") {
            col.role = ColumnRole::Condition;
        } else if (role == "label") {
            col.role = ColumnRole::Label;
        } else {
            throw DataError("schema '" + path + "': unknown role '" + role + "'");
        }
        schema.push_back(std::move(col));
    }
    validate_schema(schema);
    return schema;
}

DatasetSplit split_dataset(const SampleTable& table, double train_fraction, std::uint64_t seed) {
    if (table.rows.empty()) throw DataError("cannot split an empty table");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DataError("train_fraction must be in (0,1)");
    }
    const std::size_t n = table.n_rows();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);

    const auto n_train =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    DatasetSplit split;
    split.seed = seed;
    split.train.schema = table.schema;
    split.test.schema = table.schema;
    for (std::size_t i = 0; i < n; ++i) {
        auto& dst = i < n_train ? split.train : split.test;
        dst.rows.push_back(table.rows[idx[i]]);
    }
    return split;
}

SampleTable union_datasets(const SampleTable& a, const SampleTable& b) {
    const auto schema_text = [](const Schema& s) {
        std::string t;
        for (const auto& c : s) {
            t += c.name + '|' + (c.kind == ColumnKind::Continuous ? "c" : "k");
            for (const auto& cat : c.categories) t += ';' + cat;
            t += '\n';
        }
        return t;
    };
    if (schema_text(a.schema) != schema_text(b.schema)) {
        throw DataError("union requires identical schemas");
    }
    SampleTable out;
    out.schema = a.schema;
    out.rows = a.rows;
    out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
    return out;
}

std::map<std::string, CategoryBalance> class_balance(const SampleTable& table,
                                                     const std::string& column) {
    const std::size_t c = column_index(table.schema, column);
    if (table.schema[c].kind != ColumnKind::Categorical) {
        throw DataError("class_balance on continuous column '" + column + "'");
    }
    std::map<std::string, CategoryBalance> out;
    const auto& cats = table.schema[c].categories;
    for (const auto& cat : cats) out[cat] = CategoryBalance{};
    for (const auto& row : table.rows) {
        out[cats[static_cast<std::size_t>(row[c])]].count += 1;
    }
    const double n = static_cast<double>(table.n_rows());
    if (n > 0) {
        for (auto& [_, bal] : out) bal.proportion = static_cast<double>(bal.count) / n;
    }
    return out;
}

}  // namespace tsgen
