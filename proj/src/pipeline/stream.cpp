#include <mutex>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "aml/pipeline/commands.hpp"

namespace aml::pipeline {

streamproc::StreamSummary run_stream(Workspace& workspace, std::optional<std::uint64_t> max_batches) {
    const auto& config = workspace.config();
    auto& log = workspace.log();
    if (!log.find_topic(config.topic.name)) log.create_topic(config.topic.name, config.topic.partitions);
    auto& registry = workspace.registry();

    auto config_stream = config.stream;
    config_stream.topic = config.topic.name;
    const double threshold = config.training.threshold;

    // Loads a version's parameters once; the registry is consulted at every
    // batch boundary so an activation takes effect on the next batch.
    std::shared_ptr<const streamproc::ScoringModel> cached;
    auto provider = [&registry, &cached, threshold]() -> std::shared_ptr<const streamproc::ScoringModel> {
        const auto active = registry.active();
        if (!active) return nullptr;
        if (!cached || cached->version != active->version) {
            auto model = std::make_shared<streamproc::ScoringModel>();
            model->version = active->version;
            model->model = registry.load_model(active->version);
            model->schema = active->schema;
            model->threshold = threshold;
            cached = std::move(model);
        }
        return cached;
    };
    streamproc::StreamProcessor processor(log, workspace.stream_dir(), config_stream, provider, &workspace.tables());
    return processor.run(max_batches);
}

streamproc::StreamSummary cmd_stream(const PipelineConfig& config, std::optional<std::uint64_t> max_batches,
                                     std::ostream& transcript) {
    Workspace workspace(config);
    const auto summary = run_stream(workspace, max_batches);
    fmt::print(transcript, "stream: {} batches, {} records, {} alerts, {} dead letters\n", summary.batches,
               summary.records, summary.alerts, summary.dead_letters);
    fmt::print(transcript, "  latency ticks p50 {} p95 {} max {} (cadence {})\n", summary.latency_percentile(50),
               summary.latency_percentile(95), summary.latency_percentile(100), config.stream.cadence_ticks);
    if (summary.model_fallbacks) {
        fmt::print(transcript, "  warning: {} batches fell back to rules only (model/schema mismatch)\n",
                   summary.model_fallbacks);
    }
    return summary;
}

}  // namespace aml::pipeline
