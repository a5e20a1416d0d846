#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aml/common/files.hpp"

namespace aml::storage {

enum class ColumnType { integer, real, text, boolean };

using Value = std::variant<std::int64_t, double, std::string, bool>;

/// Column name -> value. Every declared column must be present.
using Row = std::map<std::string, Value, std::less<>>;

struct Column {
    std::string name;
    ColumnType type = ColumnType::text;
    bool indexed = false;

    bool operator==(const Column&) const = default;
};

struct TableSchema {
    std::string name;
    std::vector<Column> columns;
    std::string primary_key;

    std::optional<std::size_t> column_index(std::string_view column) const;
    void validate() const;

    bool operator==(const TableSchema&) const = default;
};

/// Declarations for the pipeline's four structured tables:
/// transactions, alerts, features, metrics.
const std::vector<TableSchema>& standard_table_schemas();

enum class CompareOp { eq, lt, le, gt, ge };

/// One conjunct of a query predicate; the column must be indexed or the
/// primary key.
struct Condition {
    std::string column;
    CompareOp op = CompareOp::eq;
    Value value;
};

/// Structured table store. Each table lives in memory and is persisted as
///   <root>/<table>.snapshot.jsonl   line 1 {"schema": ...}, then one JSON array per row
///   <root>/<table>.log.jsonl        one JSON array per upserted row since the snapshot
/// Reopening replays snapshot + log; a torn final log line is discarded.
/// Single writer, many concurrent readers.
class TableStore {
public:
    explicit TableStore(std::filesystem::path root);
    ~TableStore();

    TableStore(const TableStore&) = delete;
    TableStore& operator=(const TableStore&) = delete;

    /// Creates the table, or accepts an existing identical declaration.
    /// A conflicting declaration throws Error(already_exists).
    void create_table(const TableSchema& schema);
    bool has_table(std::string_view table) const;
    const TableSchema& schema(std::string_view table) const;

    /// Validates every row first (Error(invalid_input) naming the offending
    /// column; the table is left unchanged), then inserts or replaces by
    /// primary key. Returns the number of rows written.
    std::size_t upsert_rows(std::string_view table, std::span<const Row> rows);

    /// Rows satisfying every condition, ordered by primary key.
    std::vector<Row> query(std::string_view table, std::span<const Condition> predicate) const;

    /// Every row, ordered by primary key.
    std::vector<Row> scan(std::string_view table) const;

    std::optional<Row> get(std::string_view table, const Value& primary_key) const;
    std::size_t size(std::string_view table) const;

    /// Rewrites the snapshot and empties the log.
    void checkpoint(std::string_view table);
    void checkpoint_all();

private:
    struct Table;

    Table& table(std::string_view name) const;
    void load(const std::filesystem::path& snapshot);

    std::filesystem::path root_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::unique_ptr<Table>, std::less<>> tables_;
};

/// Value helpers for callers that know the declared type.
std::int64_t as_int(const Value& v);
double as_real(const Value& v);
const std::string& as_text(const Value& v);
bool as_bool(const Value& v);

}  // namespace aml::storage
