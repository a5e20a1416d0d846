#include "aml/txgen/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "aml/common/error.hpp"

namespace aml::txgen {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kLabelKey = "is_laundering";
constexpr std::string_view kLegacyLabelKey = "is_laundersing";

const std::vector<std::string_view>& csv_columns() {
    static const std::vector<std::string_view> columns{
        "id", "timestamp", "amount", "sender_account", "payment_currency", "received_currency",
        "sender_bank_location", "receiver_bank_location", "payment_type", "is_laundering"};
    return columns;
}

std::string format_amount(double amount) { return fmt::format("{:.2f}", amount); }

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (quoted) throw Error(Errc::data, "unterminated quoted field");
    fields.push_back(std::move(current));
    return fields;
}

template <typename T>
T parse_number(std::string_view text, std::string_view field) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw Error(Errc::data, fmt::format("field '{}': cannot parse '{}'", field, text));
    }
    return value;
}

bool parse_bool(std::string_view text, std::string_view field) {
    if (text == "1" || text == "true" || text == "True") return true;
    if (text == "0" || text == "false" || text == "False") return false;
    throw Error(Errc::data, fmt::format("field '{}': cannot parse boolean '{}'", field, text));
}

void validate(const Transaction& t) {
    if (!(t.amount > 0.0)) throw Error(Errc::data, fmt::format("transaction {}: amount must be positive", t.id));
    if (t.timestamp < 0) throw Error(Errc::data, fmt::format("transaction {}: negative timestamp", t.id));
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

ordered_json to_json(const Transaction& t) {
    ordered_json j;
    j["id"] = t.id;
    j["timestamp"] = t.timestamp;
    j["amount"] = t.amount;
    j["sender_account"] = t.sender_account;
    for (Feature f : kFeatures) j[std::string(feature_name(f))] = t.category(f);
    j[std::string(kLabelKey)] = t.is_laundering;
    return j;
}

Transaction transaction_from_json(const json& j) {
    if (!j.is_object()) throw Error(Errc::data, "transaction record must be a JSON object");
    Transaction t;
    try {
        t.id = j.at("id").get<std::uint64_t>();
        t.timestamp = j.at("timestamp").get<std::int64_t>();
        t.amount = j.at("amount").get<double>();
        t.sender_account = j.at("sender_account").get<std::uint64_t>();
        for (Feature f : kFeatures) t.category(f) = j.at(std::string(feature_name(f))).get<std::string>();
        if (auto it = j.find(kLabelKey); it != j.end()) {
            t.is_laundering = it->get<bool>();
        } else {
            t.is_laundering = j.at(std::string(kLegacyLabelKey)).get<bool>();
        }
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("invalid transaction record: {}", e.what()));
    }
    validate(t);
    return t;
}

std::string to_json_line(const Transaction& t) { return to_json(t).dump(); }

Transaction parse_json_line(std::string_view line) {
    json j = json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded()) throw Error(Errc::data, "malformed JSON");
    return transaction_from_json(j);
}

std::string csv_header() {
    std::string out;
    for (std::size_t i = 0; i < csv_columns().size(); ++i) {
        if (i) out += ',';
        out += csv_columns()[i];
    }
    return out;
}

std::string to_csv_row(const Transaction& t) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{}", t.id, t.timestamp, format_amount(t.amount), t.sender_account,
                       csv_escape(t.payment_currency), csv_escape(t.received_currency),
                       csv_escape(t.sender_bank_location), csv_escape(t.receiver_bank_location),
                       csv_escape(t.payment_type), t.is_laundering ? 1 : 0);
}

DatasetFormat format_for(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? DatasetFormat::csv : DatasetFormat::jsonl;
}

void write_dataset(std::ostream& out, const std::vector<Transaction>& transactions, DatasetFormat format) {
    if (format == DatasetFormat::csv) out << csv_header() << '\n';
    for (const auto& t : transactions) {
        out << (format == DatasetFormat::csv ? to_csv_row(t) : to_json_line(t)) << '\n';
    }
}

void write_dataset(const std::filesystem::path& path, const std::vector<Transaction>& transactions) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, fmt::format("cannot open '{}' for writing", path.string()));
    write_dataset(out, transactions, format_for(path));
    out.flush();
    if (!out) throw Error(Errc::io, fmt::format("write to '{}' failed", path.string()));
}

std::vector<Transaction> read_dataset(std::istream& in, DatasetFormat format) {
    std::vector<Transaction> out;
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t, std::less<>> column_index;

    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (line.empty()) continue;
        try {
            if (format == DatasetFormat::jsonl) {
                out.push_back(parse_json_line(line));
                continue;
            }
            auto fields = split_csv(line);
            if (column_index.empty()) {
                for (std::size_t i = 0; i < fields.size(); ++i) {
                    const std::string name = fields[i] == kLegacyLabelKey ? std::string(kLabelKey) : fields[i];
                    column_index[name] = i;
                }
                for (auto column : csv_columns()) {
                    if (!column_index.contains(column)) {
                        throw Error(Errc::data, fmt::format("CSV header lacks column '{}'", column));
                    }
                }
                continue;
            }
            if (fields.size() != column_index.size()) {
                throw Error(Errc::data, fmt::format("expected {} fields, found {}", column_index.size(), fields.size()));
            }
            auto field = [&](std::string_view name) -> const std::string& {
                return fields[column_index.find(name)->second];
            };
            Transaction t;
            t.id = parse_number<std::uint64_t>(field("id"), "id");
            t.timestamp = parse_number<std::int64_t>(field("timestamp"), "timestamp");
            t.amount = parse_number<double>(field("amount"), "amount");
            t.sender_account = parse_number<std::uint64_t>(field("sender_account"), "sender_account");
            for (Feature f : kFeatures) t.category(f) = field(feature_name(f));
            t.is_laundering = parse_bool(field(kLabelKey), kLabelKey);
            validate(t);
            out.push_back(std::move(t));
        } catch (const Error& e) {
            throw Error(Errc::data, fmt::format("line {}: {}", line_no, e.what()));
        }
    }
    return out;
}

std::vector<Transaction> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, fmt::format("cannot open dataset '{}'", path.string()));
    return read_dataset(in, format_for(path));
}

}  // namespace aml::txgen
