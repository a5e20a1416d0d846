#include "aml/pipeline/workspace.hpp"

#include <fmt/format.h>

#include "aml/common/calendar.hpp"
#include "aml/common/error.hpp"
#include "aml/txgen/io.hpp"

namespace aml::pipeline {

Workspace::Workspace(const PipelineConfig& config) : config_(config) {}
Workspace::~Workspace() = default;

eventlog::EventLog& Workspace::log() {
    if (!log_) log_ = std::make_unique<eventlog::EventLog>(config_.data_dir / "log");
    return *log_;
}

storage::BlobStore& Workspace::blobs() {
    if (!blobs_) blobs_ = std::make_unique<storage::BlobStore>(config_.data_dir / "blobs");
    return *blobs_;
}

storage::TableStore& Workspace::tables() {
    if (!tables_) {
        tables_ = std::make_unique<storage::TableStore>(config_.data_dir / "tables");
        for (const auto& schema : storage::standard_table_schemas()) tables_->create_table(schema);
    }
    return *tables_;
}

lifecycle::ModelRegistry& Workspace::registry() {
    if (!registry_) registry_ = std::make_unique<lifecycle::ModelRegistry>(config_.data_dir / "registry", blobs());
    return *registry_;
}

storage::Row transaction_row(const txgen::Transaction& t) {
    return {{"id", static_cast<std::int64_t>(t.id)},
            {"timestamp", t.timestamp},
            {"day", static_cast<std::int64_t>(t.day())},
            {"month", static_cast<std::int64_t>(month_of_day(t.day()))},
            {"amount", t.amount},
            {"sender_account", static_cast<std::int64_t>(t.sender_account)},
            {"payment_currency", t.payment_currency},
            {"received_currency", t.received_currency},
            {"sender_bank_location", t.sender_bank_location},
            {"receiver_bank_location", t.receiver_bank_location},
            {"payment_type", t.payment_type},
            {"is_laundering", t.is_laundering}};
}

txgen::Transaction transaction_from_row(const storage::Row& row) {
    txgen::Transaction t;
    t.id = static_cast<std::uint64_t>(storage::as_int(row.at("id")));
    t.timestamp = storage::as_int(row.at("timestamp"));
    t.amount = storage::as_real(row.at("amount"));
    t.sender_account = static_cast<std::uint64_t>(storage::as_int(row.at("sender_account")));
    t.payment_currency = storage::as_text(row.at("payment_currency"));
    t.received_currency = storage::as_text(row.at("received_currency"));
    t.sender_bank_location = storage::as_text(row.at("sender_bank_location"));
    t.receiver_bank_location = storage::as_text(row.at("receiver_bank_location"));
    t.payment_type = storage::as_text(row.at("payment_type"));
    t.is_laundering = storage::as_bool(row.at("is_laundering"));
    return t;
}

std::vector<txgen::Transaction> load_transactions(Workspace& workspace) {
    auto& tables = workspace.tables();
    if (tables.size("transactions") > 0) {
        std::vector<txgen::Transaction> out;
        out.reserve(tables.size("transactions"));
        for (const auto& row : tables.scan("transactions")) out.push_back(transaction_from_row(row));
        return out;
    }
    const auto path = workspace.config().dataset_path();
    if (std::filesystem::exists(path)) return txgen::read_dataset(path);
    throw Error(Errc::missing_prerequisite,
                fmt::format("no transactions found (table empty, {} missing); run `amlpipe generate` first",
                            path.string()));
}

}  // namespace aml::pipeline
