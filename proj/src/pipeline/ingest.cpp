#include <fmt/format.h>
#include <fmt/ostream.h>

#include "aml/common/calendar.hpp"
#include "aml/common/error.hpp"
#include "aml/pipeline/commands.hpp"
#include "aml/txgen/io.hpp"

namespace aml::pipeline {

GenerateResult cmd_generate(const PipelineConfig& config, std::optional<std::uint64_t> count,
                            std::optional<std::filesystem::path> out, std::ostream& transcript) {
    auto generator = config.generator;
    if (count) generator.count = *count;
    generator.validate();
    GenerateResult result;
    result.path = out ? *out : config.dataset_path();
    const auto transactions = txgen::generate(generator);
    if (result.path.has_parent_path()) ensure_directory(result.path.parent_path());
    txgen::write_dataset(result.path, transactions);
    result.count = transactions.size();
    for (const auto& t : transactions) result.laundering += t.is_laundering;
    fmt::print(transcript, "generate: wrote {} transactions ({} laundering) to {}\n", result.count, result.laundering,
               result.path.string());
    return result;
}

IngestResult ingest_transactions(Workspace& workspace, std::span<const txgen::Transaction> transactions) {
    const auto& config = workspace.config();
    auto& log = workspace.log();
    if (!log.find_topic(config.topic.name)) log.create_topic(config.topic.name, config.topic.partitions);

    IngestResult result;
    const std::uint64_t start = log.clock();
    result.first_tick = start;
    result.last_tick = start;

    std::map<std::string, std::string> raw_by_date;
    std::vector<storage::Row> rows;
    rows.reserve(transactions.size());
    for (std::size_t i = 0; i < transactions.size(); ++i) {
        const auto& t = transactions[i];
        const std::uint64_t tick = start + i * config.topic.ticks_per_record;
        const std::string line = txgen::to_json_line(t);
        const auto placed = log.publish(config.topic.name, std::to_string(t.sender_account), line, tick);
        ++result.per_partition[placed.partition];
        ++result.published;
        result.last_tick = tick;
        auto& raw = raw_by_date[iso_date(t.day())];
        raw += line;
        raw += '\n';
        rows.push_back(transaction_row(t));
    }
    log.flush();

    const std::string batch_name = fmt::format("ingest-{:012d}.jsonl", start);
    for (const auto& [date, bytes] : raw_by_date) {
        storage::BlobKey key{"raw", date, batch_name};
        workspace.blobs().put(key, bytes);
        result.archived.push_back(std::move(key));
    }
    workspace.tables().upsert_rows("transactions", rows);
    return result;
}

IngestResult cmd_ingest(const PipelineConfig& config, const std::filesystem::path& dataset, std::ostream& transcript) {
    if (!std::filesystem::exists(dataset)) {
        throw Error(Errc::io, fmt::format("dataset {} does not exist; run `amlpipe generate` first", dataset.string()));
    }
    const auto transactions = txgen::read_dataset(dataset);
    Workspace workspace(config);
    const auto result = ingest_transactions(workspace, transactions);
    fmt::print(transcript, "ingest: published {} records to '{}' (ticks {}..{})\n", result.published,
               config.topic.name, result.first_tick, result.last_tick);
    for (const auto& [partition, count] : result.per_partition) {
        fmt::print(transcript, "  partition {}: {}\n", partition, count);
    }
    fmt::print(transcript, "  archived {} raw blobs, one per date partition\n", result.archived.size());
    return result;
}

}  // namespace aml::pipeline
