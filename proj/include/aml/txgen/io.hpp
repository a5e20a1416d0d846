#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "aml/txgen/transaction.hpp"

namespace aml::txgen {

/// Canonical JSON object for one transaction (fields in declaration order).
nlohmann::ordered_json to_json(const Transaction& t);

/// Accepts both `is_laundering` and the legacy `is_laundersing` label key.
/// Throws Error(data) on a missing or mistyped field.
Transaction transaction_from_json(const nlohmann::json& j);

/// One JSON-lines record (no trailing newline).
std::string to_json_line(const Transaction& t);
Transaction parse_json_line(std::string_view line);

/// CSV header with the canonical field names.
std::string csv_header();
std::string to_csv_row(const Transaction& t);

enum class DatasetFormat { jsonl, csv };

/// Picks CSV for a `.csv` extension, JSON-lines otherwise.
DatasetFormat format_for(const std::filesystem::path& path);

void write_dataset(std::ostream& out, const std::vector<Transaction>& transactions, DatasetFormat format);
void write_dataset(const std::filesystem::path& path, const std::vector<Transaction>& transactions);

/// Parses a whole dataset; the first malformed line aborts with an
/// Error(data) whose message cites the 1-based line number.
std::vector<Transaction> read_dataset(std::istream& in, DatasetFormat format);
std::vector<Transaction> read_dataset(const std::filesystem::path& path);

}  // namespace aml::txgen
