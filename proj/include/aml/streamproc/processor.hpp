#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aml/eventlog/event_log.hpp"
#include "aml/featstore/schema.hpp"
#include "aml/models/model.hpp"
#include "aml/storage/table_store.hpp"
#include "aml/streamproc/rules.hpp"

namespace aml::streamproc {

struct MicroBatch {
    std::uint64_t batch_id = 0;
    std::vector<eventlog::LogRecord> records;  // payloads are transaction JSON lines
    std::uint64_t drain_tick = 0;
    /// Highest offset per partition contained in the batch.
    std::map<int, std::uint64_t> watermark;
};

/// A registry version ready for online scoring.
struct ScoringModel {
    int version = 0;
    models::TrainedModel model;
    featstore::EncodingSchema schema;
    double threshold = 0.5;
};

/// Probability for one transaction. Throws Error(incompatible) when the
/// schema is not the one the model was trained with.
double score_online(const Transaction& t, const featstore::EncodingSchema& schema,
                    const models::TrainedModel& model);

struct DeadLetter {
    int partition = 0;
    std::uint64_t offset = 0;
    std::string error;
};

struct BatchResult {
    std::vector<Alert> alerts;  // log order, one per transaction
    std::vector<DeadLetter> dead_letters;
    std::size_t observed = 0;   // records counted into the stats
    std::size_t replayed = 0;   // records below the stats watermark
    std::uint64_t unseen_categories = 0;
    std::vector<std::uint64_t> accounts;  // senders touched, first-seen order
};

/// Decodes, scores and counts one batch. Rules are checked before the record
/// enters the stats; the model is consulted only when no rule fires, since a
/// rule alert takes the source field anyway. A model that rejects the
/// schema throws Error(incompatible) before any record is processed.
BatchResult run_microbatch(const MicroBatch& batch, RollingStats& stats, const ScoringModel* model,
                           const RuleConfig& rules);

struct StreamConfig {
    std::string topic = "transactions";
    std::string group = "scoring";
    std::uint64_t cadence_ticks = 1'000;
    std::size_t max_batch_records = 1'000;
    RuleConfig rules;
};

struct StreamSummary {
    std::uint64_t batches = 0;
    std::uint64_t records = 0;
    std::uint64_t alerts = 0;
    std::uint64_t dead_letters = 0;
    std::uint64_t model_fallbacks = 0;  // batches scored rules-only after an incompatibility
    std::vector<std::uint64_t> latencies;

    /// Nearest-rank percentile of `latencies` (0 when empty).
    std::uint64_t latency_percentile(double p) const;
};

/// Single-loop micro-batch consumer driven by simulated ticks.
///
/// A batch drains at the next cadence boundary, or as soon as
/// max_batch_records records are visible, whichever comes first; idle
/// stretches are skipped. Per batch: alerts are appended to
/// <dir>/alerts.jsonl and the alerts table, dead letters to
/// <dir>/dead_letters.jsonl, the stats snapshot is written, and only then is
/// the log offset committed.
class StreamProcessor {
public:
    using ModelProvider = std::function<std::shared_ptr<const ScoringModel>()>;

    StreamProcessor(eventlog::EventLog& log, std::filesystem::path dir, StreamConfig config,
                    ModelProvider provider = {}, storage::TableStore* tables = nullptr);

    /// Processes until the group has no pending records or `max_batches`
    /// batches ran.
    StreamSummary run(std::optional<std::uint64_t> max_batches = std::nullopt);

    const RollingStats& stats() const noexcept { return stats_; }
    std::filesystem::path alerts_path() const { return dir_ / "alerts.jsonl"; }
    std::filesystem::path dead_letters_path() const { return dir_ / "dead_letters.jsonl"; }

    /// Called after outputs are durable and before the offset commit; lets
    /// tests simulate a crash by throwing.
    std::function<void(const MicroBatch&)> before_commit;

private:
    std::filesystem::path state_path() const;
    void load_state();
    void save_state() const;
    std::shared_ptr<const ScoringModel> current_model(StreamSummary& summary) const;

    eventlog::EventLog& log_;
    std::filesystem::path dir_;
    StreamConfig config_;
    ModelProvider provider_;
    storage::TableStore* tables_;
    RollingStats stats_;
    std::uint64_t now_ = 0;
    std::uint64_t next_drain_ = 0;
    std::uint64_t next_batch_id_ = 1;
};

}  // namespace aml::streamproc
