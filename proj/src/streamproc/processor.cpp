#include "aml/streamproc/processor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "aml/common/calendar.hpp"
#include "aml/common/error.hpp"
#include "aml/common/files.hpp"
#include "aml/txgen/io.hpp"

namespace aml::streamproc {

using nlohmann::json;

double score_online(const Transaction& t, const featstore::EncodingSchema& schema, const models::TrainedModel& model) {
    if (schema.hash() != model.schema_hash) {
        throw Error(Errc::incompatible, "encoding schema does not match the model's training schema");
    }
    std::vector<double> row(schema.total_width(), 0.0);
    featstore::encode_into(t, schema, row);
    return models::predict_row(model, row);
}

BatchResult run_microbatch(const MicroBatch& batch, RollingStats& stats, const ScoringModel* model,
                           const RuleConfig& rules) {
    if (model && model->schema.hash() != model->model.schema_hash) {
        throw Error(Errc::incompatible,
                    fmt::format("model v{} was trained on a different encoding schema", model->version));
    }
    BatchResult result;
    std::unordered_map<std::uint64_t, std::size_t> by_transaction;
    std::unordered_set<std::uint64_t> touched;
    std::vector<double> row(model ? model->schema.total_width() : 0);

    for (const auto& record : batch.records) {
        Transaction t;
        try {
            t = txgen::parse_json_line(record.payload);
        } catch (const std::exception& e) {
            result.dead_letters.push_back({record.partition, record.offset, e.what()});
            continue;
        }

        auto alert = apply_rules(t, stats, rules);
        if (!alert && model) {
            std::fill(row.begin(), row.end(), 0.0);
            result.unseen_categories += featstore::encode_into(t, model->schema, row);
            const double p = models::predict_row(model->model, row);
            if (p >= model->threshold) {
                alert = Alert{};
                alert->transaction_id = t.id;
                alert->source = fmt::format("v{}", model->version);
                alert->score = p;
                alert->reason = fmt::format("model score {:.4f}", p);
                alert->payment_type = t.payment_type;
                alert->day = t.day();
            }
        }

        const bool counted = stats.observe(t, record.partition, record.offset);
        ++(counted ? result.observed : result.replayed);
        if (touched.insert(t.sender_account).second) result.accounts.push_back(t.sender_account);
        if (!alert) continue;
        if (counted) stats.record_alert(t.payment_type);

        alert->emit_tick = batch.drain_tick;
        alert->ingest_tick = record.ingest_tick;
        alert->latency = batch.drain_tick >= record.ingest_tick ? batch.drain_tick - record.ingest_tick : 0;
        alert->partition = record.partition;
        alert->offset = record.offset;

        const auto [it, fresh] = by_transaction.try_emplace(t.id, result.alerts.size());
        if (fresh) {
            result.alerts.push_back(std::move(*alert));
        } else if (alert->source.starts_with("rule:") && !result.alerts[it->second].source.starts_with("rule:")) {
            auto& kept = result.alerts[it->second];
            kept.source = alert->source;
            kept.score = alert->score;
            kept.reason = alert->reason;
        }
    }
    return result;
}

std::uint64_t StreamSummary::latency_percentile(double p) const {
    if (latencies.empty()) return 0;
    auto sorted = latencies;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

StreamProcessor::StreamProcessor(eventlog::EventLog& log, std::filesystem::path dir, StreamConfig config,
                                 ModelProvider provider, storage::TableStore* tables)
    : log_(log),
      dir_(std::move(dir)),
      config_(std::move(config)),
      provider_(std::move(provider)),
      tables_(tables),
      stats_(config_.rules.velocity_window) {
    if (config_.cadence_ticks == 0) throw Error(Errc::config, "stream cadence must be positive");
    if (config_.max_batch_records == 0) throw Error(Errc::config, "stream max_batch_records must be positive");
    if (!log_.find_topic(config_.topic)) {
        throw Error(Errc::not_found, fmt::format("topic '{}' does not exist; run ingest first", config_.topic));
    }
    ensure_directory(dir_);
    if (tables_) {
        for (const auto& schema : storage::standard_table_schemas()) {
            if (schema.name == "alerts" || schema.name == "features") tables_->create_table(schema);
        }
    }
    load_state();
}

std::filesystem::path StreamProcessor::state_path() const { return dir_ / (config_.group + ".state.json"); }

void StreamProcessor::load_state() {
    if (!std::filesystem::exists(state_path())) return;
    try {
        const auto j = json::parse(read_file(state_path()));
        stats_ = RollingStats::from_json(j.at("stats"));
        now_ = j.at("now").get<std::uint64_t>();
        next_drain_ = j.at("next_drain").get<std::uint64_t>();
        next_batch_id_ = j.at("next_batch_id").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("{}: {}", state_path().string(), e.what()));
    }
}

void StreamProcessor::save_state() const {
    const json j{{"stats", stats_.to_json()},
                 {"now", now_},
                 {"next_drain", next_drain_},
                 {"next_batch_id", next_batch_id_}};
    write_file_atomic(state_path(), j.dump());
}

std::shared_ptr<const ScoringModel> StreamProcessor::current_model(StreamSummary& summary) const {
    if (!provider_) return nullptr;
    try {
        return provider_();
    } catch (const Error& e) {
        if (e.code() != Errc::incompatible) throw;
        ++summary.model_fallbacks;
        return nullptr;
    }
}

StreamSummary StreamProcessor::run(std::optional<std::uint64_t> max_batches) {
    StreamSummary summary;
    AppendFile alert_sink(alerts_path());
    AppendFile dead_letter_sink(dead_letters_path());
    const auto cadence = config_.cadence_ticks;

    while (!max_batches || summary.batches < *max_batches) {
        const auto pending = log_.earliest_pending_tick(config_.group, config_.topic);
        if (!pending) break;
        if (*pending > next_drain_) next_drain_ = (*pending + cadence - 1) / cadence * cadence;

        MicroBatch batch;
        batch.records = log_.poll(config_.group, config_.topic, config_.max_batch_records, next_drain_);
        if (batch.records.empty()) {
            now_ = next_drain_;
            next_drain_ += cadence;
            continue;
        }
        if (batch.records.size() == config_.max_batch_records) {
            batch.drain_tick = std::max(now_, batch.records.back().ingest_tick);
        } else {
            batch.drain_tick = next_drain_;
        }
        now_ = batch.drain_tick;
        if (now_ >= next_drain_) next_drain_ = now_ / cadence * cadence + cadence;
        batch.batch_id = next_batch_id_++;
        for (const auto& r : batch.records) {
            auto& mark = batch.watermark[r.partition];
            mark = std::max(mark, r.offset);
        }

        auto model = current_model(summary);
        BatchResult result;
        try {
            result = run_microbatch(batch, stats_, model.get(), config_.rules);
        } catch (const Error& e) {
            if (e.code() != Errc::incompatible) throw;
            ++summary.model_fallbacks;
            result = run_microbatch(batch, stats_, nullptr, config_.rules);
        }

        std::string lines;
        std::vector<storage::Row> rows;
        for (const auto& a : result.alerts) {
            lines += to_json(a).dump();
            lines += '\n';
            summary.latencies.push_back(a.latency);
            if (tables_) {
                rows.push_back({{"transaction_id", static_cast<std::int64_t>(a.transaction_id)},
                                {"source", a.source},
                                {"score", a.score},
                                {"reason", a.reason},
                                {"emit_tick", static_cast<std::int64_t>(a.emit_tick)},
                                {"ingest_tick", static_cast<std::int64_t>(a.ingest_tick)},
                                {"latency", static_cast<std::int64_t>(a.latency)},
                                {"payment_type", a.payment_type},
                                {"day", static_cast<std::int64_t>(a.day)},
                                {"month", static_cast<std::int64_t>(month_of_day(a.day))}});
            }
        }
        if (!lines.empty()) {
            alert_sink.append(lines);
            alert_sink.sync();
        }
        if (!result.dead_letters.empty()) {
            std::string dead;
            for (const auto& d : result.dead_letters) {
                dead += json{{"partition", d.partition}, {"offset", d.offset}, {"error", d.error}}.dump();
                dead += '\n';
            }
            dead_letter_sink.append(dead);
            dead_letter_sink.sync();
        }
        if (tables_ && !rows.empty()) tables_->upsert_rows("alerts", rows);
        if (tables_ && !result.accounts.empty()) {
            std::vector<storage::Row> features;
            features.reserve(result.accounts.size());
            for (const auto account : result.accounts) {
                const auto last = stats_.last_tick(account);
                storage::Row row{{"account", static_cast<std::int64_t>(account)},
                                 {"window_count", static_cast<std::int64_t>(last ? stats_.window_count(account, *last) : 0)},
                                 {"total_count", static_cast<std::int64_t>(stats_.account_total(account))}};
                if (last) row.emplace("last_tick", static_cast<std::int64_t>(*last));
                features.push_back(std::move(row));
            }
            tables_->upsert_rows("features", features);
        }
        save_state();

        if (before_commit) before_commit(batch);
        for (const auto& [partition, offset] : batch.watermark) {
            log_.commit(config_.group, config_.topic, partition, offset);
        }

        ++summary.batches;
        summary.records += batch.records.size();
        summary.alerts += result.alerts.size();
        summary.dead_letters += result.dead_letters.size();
    }
    return summary;
}

}  // namespace aml::streamproc
