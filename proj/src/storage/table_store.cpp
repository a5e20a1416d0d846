#include "aml/storage/table_store.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

#include <fmt/format.h>

#include "json.hpp"

#include "aml/common/error.hpp"

namespace aml::storage {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* type_name(ColumnType t) {
    switch (t) {
        case ColumnType::integer: return "integer";
        case ColumnType::real: return "real";
        case ColumnType::text: return "text";
        case ColumnType::boolean: return "boolean";
    }
    return "?";
}

ColumnType type_from_name(std::string_view name) {
    if (name == "integer") return ColumnType::integer;
    if (name == "real") return ColumnType::real;
    if (name == "text") return ColumnType::text;
    if (name == "boolean") return ColumnType::boolean;
    throw Error(Errc::data, fmt::format("unknown column type '{}'", name));
}

/// Converts `v` to the column's representation; nullopt when incompatible.
std::optional<Value> coerce(const Value& v, ColumnType type) {
    switch (type) {
        case ColumnType::integer:
            if (auto p = std::get_if<std::int64_t>(&v)) return *p;
            return std::nullopt;
        case ColumnType::real:
            if (auto p = std::get_if<double>(&v)) return *p;
            if (auto p = std::get_if<std::int64_t>(&v)) return static_cast<double>(*p);
            return std::nullopt;
        case ColumnType::text:
            if (auto p = std::get_if<std::string>(&v)) return *p;
            return std::nullopt;
        case ColumnType::boolean:
            if (auto p = std::get_if<bool>(&v)) return *p;
            return std::nullopt;
    }
    return std::nullopt;
}

json cell_to_json(const Value& v) {
    return std::visit([](const auto& x) { return json(x); }, v);
}

Value cell_from_json(const json& j, ColumnType type) {
    switch (type) {
        case ColumnType::integer: return j.get<std::int64_t>();
        case ColumnType::real: return j.get<double>();
        case ColumnType::text: return j.get<std::string>();
        case ColumnType::boolean: return j.get<bool>();
    }
    return std::int64_t{0};
}

json schema_to_json(const TableSchema& schema) {
    json columns = json::array();
    for (const auto& c : schema.columns) {
        columns.push_back({{"name", c.name}, {"type", type_name(c.type)}, {"indexed", c.indexed}});
    }
    return json{{"name", schema.name}, {"primary_key", schema.primary_key}, {"columns", columns}};
}

TableSchema schema_from_json(const json& j) {
    TableSchema schema;
    schema.name = j.at("name").get<std::string>();
    schema.primary_key = j.at("primary_key").get<std::string>();
    for (const auto& c : j.at("columns")) {
        schema.columns.push_back(Column{c.at("name").get<std::string>(), type_from_name(c.at("type").get<std::string>()),
                                        c.at("indexed").get<bool>()});
    }
    return schema;
}

bool satisfies(const Value& cell, CompareOp op, const Value& target) {
    switch (op) {
        case CompareOp::eq: return cell == target;
        case CompareOp::lt: return cell < target;
        case CompareOp::le: return cell <= target;
        case CompareOp::gt: return cell > target;
        case CompareOp::ge: return cell >= target;
    }
    return false;
}

template <typename Map>
auto range_of(const Map& map, CompareOp op, const Value& target) {
    switch (op) {
        case CompareOp::eq: return std::pair{map.lower_bound(target), map.upper_bound(target)};
        case CompareOp::lt: return std::pair{map.begin(), map.lower_bound(target)};
        case CompareOp::le: return std::pair{map.begin(), map.upper_bound(target)};
        case CompareOp::gt: return std::pair{map.upper_bound(target), map.end()};
        case CompareOp::ge: return std::pair{map.lower_bound(target), map.end()};
    }
    return std::pair{map.end(), map.end()};
}

}  // namespace

struct TableStore::Table {
    TableSchema schema;
    std::size_t pk = 0;
    std::map<Value, std::vector<Value>> rows;
    std::map<std::size_t, std::map<Value, std::set<Value>>> indexes;
    fs::path snapshot_path;
    fs::path log_path;
    AppendFile log;

    void put(std::vector<Value> cells) {
        const Value key = cells[pk];
        if (auto it = rows.find(key); it != rows.end()) {
            for (auto& [col, index] : indexes) {
                auto& keys = index[it->second[col]];
                keys.erase(key);
                if (keys.empty()) index.erase(it->second[col]);
            }
            it->second = std::move(cells);
        } else {
            it = rows.emplace(key, std::move(cells)).first;
        }
        for (auto& [col, index] : indexes) index[rows.at(key)[col]].insert(key);
    }

    Row to_row(const std::vector<Value>& cells) const {
        Row row;
        for (std::size_t i = 0; i < schema.columns.size(); ++i) row.emplace(schema.columns[i].name, cells[i]);
        return row;
    }

    std::vector<Value> to_cells(const Row& row) const {
        for (const auto& [name, value] : row) {
            if (!schema.column_index(name)) {
                throw Error(Errc::invalid_input,
                            fmt::format("table '{}': unknown column '{}'", schema.name, name));
            }
        }
        std::vector<Value> cells;
        cells.reserve(schema.columns.size());
        for (const auto& column : schema.columns) {
            auto it = row.find(column.name);
            if (it == row.end()) {
                throw Error(Errc::invalid_input,
                            fmt::format("table '{}': missing column '{}'", schema.name, column.name));
            }
            auto cell = coerce(it->second, column.type);
            if (!cell) {
                throw Error(Errc::invalid_input, fmt::format("table '{}': column '{}' expects {}", schema.name,
                                                             column.name, type_name(column.type)));
            }
            cells.push_back(std::move(*cell));
        }
        return cells;
    }

    std::string encode_cells(const std::vector<Value>& cells) const {
        json line = json::array();
        for (const auto& c : cells) line.push_back(cell_to_json(c));
        return line.dump();
    }

    std::vector<Value> decode_cells(const json& line) const {
        if (!line.is_array() || line.size() != schema.columns.size()) {
            throw Error(Errc::data, fmt::format("table '{}': malformed stored row", schema.name));
        }
        std::vector<Value> cells;
        for (std::size_t i = 0; i < schema.columns.size(); ++i) {
            cells.push_back(cell_from_json(line[i], schema.columns[i].type));
        }
        return cells;
    }

    void write_snapshot() {
        std::string out = json{{"schema", schema_to_json(schema)}}.dump();
        out += '\n';
        for (const auto& [key, cells] : rows) {
            out += encode_cells(cells);
            out += '\n';
        }
        write_file_atomic(snapshot_path, out);
        log = AppendFile();
        fs::remove(log_path);
        log = AppendFile(log_path);
    }
};

std::optional<std::size_t> TableSchema::column_index(std::string_view column) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == column) return i;
    }
    return std::nullopt;
}

void TableSchema::validate() const {
    if (name.empty() || name.find_first_of("/\\.") != std::string::npos) {
        throw Error(Errc::invalid_input, fmt::format("invalid table name '{}'", name));
    }
    if (!column_index(primary_key)) {
        throw Error(Errc::invalid_input, fmt::format("table '{}': primary key '{}' is not a column", name, primary_key));
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
        for (std::size_t j = i + 1; j < columns.size(); ++j) {
            if (columns[i].name == columns[j].name) {
                throw Error(Errc::invalid_input, fmt::format("table '{}': duplicate column '{}'", name, columns[i].name));
            }
        }
    }
}

const std::vector<TableSchema>& standard_table_schemas() {
    using enum ColumnType;
    static const std::vector<TableSchema> schemas{
        TableSchema{"transactions",
                    {{"id", integer, false},
                     {"timestamp", integer, false},
                     {"day", integer, true},
                     {"month", integer, true},
                     {"amount", real, false},
                     {"sender_account", integer, true},
                     {"payment_currency", text, false},
                     {"received_currency", text, false},
                     {"sender_bank_location", text, false},
                     {"receiver_bank_location", text, false},
                     {"payment_type", text, true},
                     {"is_laundering", boolean, false}},
                    "id"},
        TableSchema{"alerts",
                    {{"transaction_id", integer, false},
                     {"source", text, true},
                     {"score", real, false},
                     {"reason", text, false},
                     {"emit_tick", integer, false},
                     {"ingest_tick", integer, false},
                     {"latency", integer, false},
                     {"payment_type", text, true},
                     {"day", integer, false},
                     {"month", integer, true}},
                    "transaction_id"},
        TableSchema{"features",
                    {{"account", integer, false},
                     {"window_count", integer, false},
                     {"total_count", integer, false},
                     {"last_tick", integer, true}},
                    "account"},
        TableSchema{"metrics",
                    {{"key", text, false},
                     {"version", integer, true},
                     {"kind", text, false},
                     {"split", text, true},
                     {"threshold", real, false},
                     {"accuracy", real, false},
                     {"f1", real, false},
                     {"tn", integer, false},
                     {"fp", integer, false},
                     {"fn", integer, false},
                     {"tp", integer, false}},
                    "key"},
    };
    return schemas;
}

TableStore::TableStore(fs::path root) : root_(std::move(root)) {
    ensure_directory(root_);
    std::vector<fs::path> snapshots;
    for (const auto& entry : fs::directory_iterator(root_)) {
        const std::string name = entry.path().filename().string();
        if (name.ends_with(".snapshot.jsonl")) snapshots.push_back(entry.path());
    }
    std::sort(snapshots.begin(), snapshots.end());
    for (const auto& s : snapshots) load(s);
}

TableStore::~TableStore() = default;

void TableStore::load(const fs::path& snapshot) {
    std::ifstream in(snapshot, std::ios::binary);
    if (!in) throw Error(Errc::io, fmt::format("cannot open '{}'", snapshot.string()));
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::data, fmt::format("empty snapshot '{}'", snapshot.string()));

    auto t = std::make_unique<Table>();
    try {
        t->schema = schema_from_json(json::parse(line).at("schema"));
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("corrupt snapshot header in '{}': {}", snapshot.string(), e.what()));
    }
    t->pk = *t->schema.column_index(t->schema.primary_key);
    for (std::size_t i = 0; i < t->schema.columns.size(); ++i) {
        if (t->schema.columns[i].indexed) t->indexes[i];
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded()) throw Error(Errc::data, fmt::format("corrupt row in '{}'", snapshot.string()));
        t->put(t->decode_cells(row));
    }

    t->snapshot_path = snapshot;
    t->log_path = root_ / (t->schema.name + ".log.jsonl");
    if (fs::exists(t->log_path)) {
        std::ifstream log_in(t->log_path, std::ios::binary);
        std::uintmax_t good_bytes = 0;
        while (std::getline(log_in, line)) {
            const bool complete = !log_in.eof();
            json row = json::parse(line, nullptr, false);
            if (!complete || row.is_discarded()) break;  // torn tail
            t->put(t->decode_cells(row));
            good_bytes += line.size() + 1;
        }
        log_in.close();
        if (good_bytes != fs::file_size(t->log_path)) fs::resize_file(t->log_path, good_bytes);
    }
    t->log = AppendFile(t->log_path);
    tables_[t->schema.name] = std::move(t);
}

void TableStore::create_table(const TableSchema& schema) {
    schema.validate();
    std::unique_lock lock(mutex_);
    if (auto it = tables_.find(schema.name); it != tables_.end()) {
        if (it->second->schema == schema) return;
        throw Error(Errc::already_exists, fmt::format("table '{}' exists with a different schema", schema.name));
    }
    auto t = std::make_unique<Table>();
    t->schema = schema;
    t->pk = *schema.column_index(schema.primary_key);
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
        if (schema.columns[i].indexed) t->indexes[i];
    }
    t->snapshot_path = root_ / (schema.name + ".snapshot.jsonl");
    t->log_path = root_ / (schema.name + ".log.jsonl");
    t->write_snapshot();
    tables_[schema.name] = std::move(t);
}

bool TableStore::has_table(std::string_view name) const {
    std::shared_lock lock(mutex_);
    return tables_.contains(name);
}

TableStore::Table& TableStore::table(std::string_view name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) throw Error(Errc::not_found, fmt::format("unknown table '{}'", name));
    return *it->second;
}

const TableSchema& TableStore::schema(std::string_view name) const {
    std::shared_lock lock(mutex_);
    return table(name).schema;
}

std::size_t TableStore::upsert_rows(std::string_view name, std::span<const Row> rows) {
    std::unique_lock lock(mutex_);
    Table& t = table(name);
    std::vector<std::vector<Value>> prepared;
    prepared.reserve(rows.size());
    for (const auto& row : rows) prepared.push_back(t.to_cells(row));

    std::string batch;
    for (const auto& cells : prepared) {
        batch += t.encode_cells(cells);
        batch += '\n';
    }
    t.log.append(batch);
    t.log.sync();
    for (auto& cells : prepared) t.put(std::move(cells));
    return prepared.size();
}

std::vector<Row> TableStore::query(std::string_view name, std::span<const Condition> predicate) const {
    std::shared_lock lock(mutex_);
    const Table& t = table(name);

    std::vector<std::pair<std::size_t, Value>> conditions;
    for (const auto& c : predicate) {
        const auto col = t.schema.column_index(c.column);
        if (!col) throw Error(Errc::invalid_input, fmt::format("table '{}': unknown column '{}'", name, c.column));
        if (*col != t.pk && !t.indexes.contains(*col)) {
            throw Error(Errc::invalid_input, fmt::format("table '{}': column '{}' is not indexed", name, c.column));
        }
        auto target = coerce(c.value, t.schema.columns[*col].type);
        if (!target) {
            throw Error(Errc::invalid_input, fmt::format("table '{}': column '{}' expects {}", name, c.column,
                                                         type_name(t.schema.columns[*col].type)));
        }
        conditions.emplace_back(*col, std::move(*target));
    }

    auto matches_all = [&](const std::vector<Value>& cells) {
        for (std::size_t i = 0; i < conditions.size(); ++i) {
            if (!satisfies(cells[conditions[i].first], predicate[i].op, conditions[i].second)) return false;
        }
        return true;
    };

    std::vector<Row> out;
    if (conditions.empty()) {
        for (const auto& [key, cells] : t.rows) out.push_back(t.to_row(cells));
        return out;
    }
    const auto& [driver_col, driver_value] = conditions.front();
    if (driver_col == t.pk) {
        auto [first, last] = range_of(t.rows, predicate[0].op, driver_value);
        for (auto it = first; it != last; ++it) {
            if (matches_all(it->second)) out.push_back(t.to_row(it->second));
        }
        return out;
    }
    const auto& index = t.indexes.at(driver_col);
    auto [first, last] = range_of(index, predicate[0].op, driver_value);
    std::set<Value> keys;
    for (auto it = first; it != last; ++it) keys.insert(it->second.begin(), it->second.end());
    for (const auto& key : keys) {
        const auto& cells = t.rows.at(key);
        if (matches_all(cells)) out.push_back(t.to_row(cells));
    }
    return out;
}

std::vector<Row> TableStore::scan(std::string_view name) const { return query(name, {}); }

std::optional<Row> TableStore::get(std::string_view name, const Value& primary_key) const {
    std::shared_lock lock(mutex_);
    const Table& t = table(name);
    auto key = coerce(primary_key, t.schema.columns[t.pk].type);
    if (!key) return std::nullopt;
    auto it = t.rows.find(*key);
    if (it == t.rows.end()) return std::nullopt;
    return t.to_row(it->second);
}

std::size_t TableStore::size(std::string_view name) const {
    std::shared_lock lock(mutex_);
    return table(name).rows.size();
}

void TableStore::checkpoint(std::string_view name) {
    std::unique_lock lock(mutex_);
    table(name).write_snapshot();
}

void TableStore::checkpoint_all() {
    std::unique_lock lock(mutex_);
    for (auto& [name, t] : tables_) t->write_snapshot();
}

std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
double as_real(const Value& v) {
    if (auto p = std::get_if<std::int64_t>(&v)) return static_cast<double>(*p);
    return std::get<double>(v);
}
const std::string& as_text(const Value& v) { return std::get<std::string>(v); }
bool as_bool(const Value& v) { return std::get<bool>(v); }

}  // namespace aml::storage
