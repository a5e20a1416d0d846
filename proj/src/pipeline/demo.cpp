#include <algorithm>
#include <map>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "aml/common/calendar.hpp"
#include "aml/common/error.hpp"
#include "aml/common/rng.hpp"
#include "aml/pipeline/commands.hpp"
#include "aml/txgen/io.hpp"

namespace aml::pipeline {

using models::ModelKind;

namespace {

constexpr int kSteps = 8;

template <typename F>
auto run_step(std::ostream& transcript, int index, std::string_view name, F&& body) {
    fmt::print(transcript, "[{}/{}] {}\n", index, kSteps, name);
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.code(), fmt::format("demo step '{}' failed: {}", name, e.what()));
    }
}

double dominant_share(const txgen::WeightMap& weights) {
    double best = 0.0;
    for (const auto& [name, w] : weights) best = std::max(best, w);
    return best;
}

}  // namespace

DemoResult cmd_demo(const PipelineConfig& config, bool inject_shift, std::ostream& transcript) {
    if (std::filesystem::exists(config.data_dir) && !std::filesystem::is_empty(config.data_dir)) {
        throw Error(Errc::already_exists,
                    fmt::format("demo needs an empty data directory; {} is not empty", config.data_dir.string()));
    }
    Workspace workspace(config);
    auto& registry = workspace.registry();
    DemoResult result;

    auto check_registry = [&] {
        const auto records = registry.list();
        const auto active_count = std::count_if(records.begin(), records.end(), [](const auto& r) {
            return r.status == lifecycle::ModelStatus::active;
        });
        const auto active = registry.active();
        const bool held = active_count <= 1 && (active_count == 1) == active.has_value();
        result.single_active_held = result.single_active_held && held;
        fmt::print(transcript, "  registry: {} versions, active {}, single-active {}\n", records.size(),
                   active ? fmt::format("v{}", active->version) : std::string("none"), held ? "holds" : "VIOLATED");
    };

    const auto& base = config.generator;
    const std::int64_t first_half = std::max<std::int64_t>(1, base.days / 2);
    auto phase1_config = base;
    phase1_config.count = config.demo.baseline_count;
    phase1_config.days = first_half;
    auto phase2_config = inject_shift ? shifted_generator(base, config.demo) : base;
    phase2_config.seed = derive_seed(base.seed, 2);
    phase2_config.count = config.demo.shifted_count;
    phase2_config.start_day = base.start_day + first_half;
    phase2_config.days = std::max<std::int64_t>(1, base.days - first_half);
    phase2_config.first_id = base.first_id + phase1_config.count;

    const auto phase1 = run_step(transcript, 1, "generate baseline", [&] {
        auto rows = txgen::generate(phase1_config);
        ensure_directory(config.data_dir);
        txgen::write_dataset(config.dataset_path(), rows);
        std::uint64_t laundering = 0;
        for (const auto& t : rows) laundering += t.is_laundering;
        fmt::print(transcript, "  {} transactions over days {}..{}, {} laundering\n", rows.size(),
                   phase1_config.start_day, phase1_config.start_day + phase1_config.days - 1, laundering);
        return rows;
    });

    run_step(transcript, 2, "ingest baseline", [&] {
        const auto ingest = ingest_transactions(workspace, phase1);
        fmt::print(transcript, "  published {} records over {} partitions\n", ingest.published,
                   ingest.per_partition.size());
        return 0;
    });

    run_step(transcript, 3, "train and activate", [&] {
        const auto trained = train_and_register(workspace, phase1, transcript);
        result.initial_version = trained.active_version;
        check_registry();
        return 0;
    });

    auto stream_once = [&] {
        const auto summary = run_stream(workspace);
        fmt::print(transcript, "  {} batches, {} records, {} alerts, latency p95 {} ticks, {} dead letters\n",
                   summary.batches, summary.records, summary.alerts, summary.latency_percentile(95),
                   summary.dead_letters);
        return 0;
    };
    run_step(transcript, 4, "stream baseline", stream_once);

    const auto phase2 = run_step(transcript, 5, inject_shift ? "inject shifted phase" : "ingest unshifted phase", [&] {
        auto rows = txgen::generate(phase2_config);
        fmt::print(transcript, "  {} transactions over days {}..{}; dominant currency share {:.2f} -> {:.2f}; {} planted rules\n",
                   rows.size(), phase2_config.start_day, phase2_config.start_day + phase2_config.days - 1,
                   dominant_share(base.currency_weights), dominant_share(phase2_config.currency_weights),
                   phase2_config.planted_rules.size());
        ingest_transactions(workspace, rows);
        return rows;
    });
    run_step(transcript, 6, "stream second phase", stream_once);

    run_step(transcript, 7, "drift windows", [&] {
        std::map<int, models::TrainedModel> loaded;
        const std::uint64_t window = config.demo.window_size;
        const std::int64_t last_day = phase2_config.start_day + phase2_config.days - 1;
        for (std::size_t start = 0, id = 1; start < phase2.size(); start += window, ++id) {
            const auto active = registry.active();
            if (!active) throw Error(Errc::missing_prerequisite, "no active model");
            auto it = loaded.find(active->version);
            if (it == loaded.end()) it = loaded.emplace(active->version, registry.load_model(active->version)).first;

            const std::span<const txgen::Transaction> slice(phase2.data() + start,
                                                            std::min<std::size_t>(window, phase2.size() - start));
            std::vector<lifecycle::LabeledOutcome> feedback;
            feedback.reserve(slice.size());
            for (const auto& t : slice) {
                const double p = streamproc::score_online(t, active->schema, it->second);
                feedback.push_back({p >= config.training.threshold, t.is_laundering});
            }
            auto report = lifecycle::check_drift(id, active->reference_profile, slice, feedback,
                                                 active->metrics.accuracy, config.drift);
            const auto worst = std::max_element(report.psi.begin(), report.psi.end()) - report.psi.begin();
            fmt::print(transcript,
                       "  window {} (v{}, {} rows): max PSI {:.4f} on {}, live accuracy {} vs reference {:.4f}, decision {}\n",
                       id, active->version, slice.size(), report.psi[worst],
                       txgen::feature_name(txgen::kFeatures[worst]),
                       report.live_accuracy ? fmt::format("{:.4f}", *report.live_accuracy) : std::string("n/a"),
                       active->metrics.accuracy, lifecycle::decision_name(report.decision));
            for (const auto& b : report.breached) {
                fmt::print(transcript, "    breach {} = {:.4f} (threshold {:.4f})\n", b.signal, b.value, b.threshold);
            }

            if (report.decision == lifecycle::Decision::retrain) {
                lifecycle::RetrainHooks hooks;
                hooks.load_latest = [&] {
                    const storage::Condition since{"id", storage::CompareOp::ge,
                                                   static_cast<std::int64_t>(phase2_config.first_id)};
                    std::vector<txgen::Transaction> rows;
                    for (const auto& row : workspace.tables().query("transactions", std::span(&since, 1))) {
                        rows.push_back(transaction_from_row(row));
                    }
                    return rows;
                };
                hooks.train = [&](std::span<const txgen::Transaction> data, ModelKind kind, std::uint64_t seed) {
                    const std::array<ModelKind, 1> kinds{kind};
                    auto run = train_models(data, config.training, seed, kinds);
                    return lifecycle::TrainingOutcome{std::move(run.models[0].model), std::move(run.schema),
                                                      run.models[0].validation, run.models[0].test,
                                                      std::move(run.profile)};
                };
                lifecycle::RetrainPolicy policy;
                policy.f1_guard = config.f1_guard;
                policy.base_seed = config.seed;
                policy.date_partition = iso_date(last_day);
                const auto retrain = lifecycle::maybe_retrain(registry, report, hooks, workspace.log().clock(), policy);
                if (retrain.failure) {
                    fmt::print(transcript, "    retrain failed: {}\n", *retrain.failure);
                } else {
                    const auto record = registry.get(*retrain.version);
                    fmt::print(transcript, "    retrain: registered v{} ({}), validation f1 {:.6f} vs active {:.6f} - guard {}: {}\n",
                               record.version, models::kind_name(record.kind), record.metrics.f1, active->metrics.f1,
                               config.f1_guard, retrain.activated ? "activated" : "kept inactive");
                }
                result.retrains.push_back(retrain);
            }
            result.reports.push_back(std::move(report));
            check_registry();
        }
        return 0;
    });

    run_step(transcript, 8, "report", [&] {
        write_report(workspace, transcript);
        return 0;
    });

    const auto active = registry.active();
    result.final_version = active ? active->version : 0;
    fmt::print(transcript, "demo: {} windows, {} retrains, active v{} -> v{}\n", result.reports.size(),
               result.retrains.size(), result.initial_version, result.final_version);
    return result;
}

}  // namespace aml::pipeline
