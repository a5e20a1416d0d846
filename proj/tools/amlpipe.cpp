// amlpipe: command-line driver for the AML pipeline.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 I/O error, 4 data error, 5 state error (missing prerequisite,
// unknown version, non-empty demo directory).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "aml/common/error.hpp"
#include "aml/pipeline/commands.hpp"

namespace {

struct GlobalOptions {
    std::optional<std::string> config_path;
    std::optional<std::string> data_dir;
    std::optional<std::uint64_t> seed;
};

aml::pipeline::PipelineConfig resolve(const GlobalOptions& options) {
    auto config = aml::pipeline::load_config(options.config_path ? std::optional<std::filesystem::path>(*options.config_path)
                                                                  : std::nullopt);
    if (const char* env = std::getenv("AML_DATA_DIR"); env && *env) config.data_dir = env;
    if (options.data_dir) config.data_dir = *options.data_dir;
    if (options.seed) config.set_seed(*options.seed);
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic AML transaction pipeline: generate, ingest, stream, train, report, demo"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "JSON pipeline config (unknown keys are rejected)");
    app.add_option("--data-dir", global.data_dir, "Root directory for all stores and outputs (overrides AML_DATA_DIR)");
    app.add_option("--seed", global.seed, "Pipeline seed (also seeds the generator)");

    std::optional<std::uint64_t> count;
    std::optional<std::string> out;
    auto* generate = app.add_subcommand("generate", "Write a synthetic dataset (JSON-lines, or CSV for .csv)");
    generate->add_option("--count", count, "Number of transactions");
    generate->add_option("--out", out, "Output path (default <data-dir>/dataset.jsonl)");

    std::optional<std::string> dataset;
    auto* ingest = app.add_subcommand("ingest", "Publish a dataset to the event log and archive it");
    ingest->add_option("--dataset", dataset, "Dataset to ingest (default <data-dir>/dataset.jsonl)");

    std::optional<std::uint64_t> max_batches;
    auto* stream = app.add_subcommand("stream", "Drain the event log through the micro-batch scorer");
    stream->add_option("--max-batches", max_batches, "Stop after this many micro-batches");

    auto* train = app.add_subcommand("train", "Train, evaluate and register all three models");
    auto* report = app.add_subcommand("report", "Write the report bundle");

    bool no_shift = false;
    auto* demo = app.add_subcommand("demo", "Run the end-to-end drift drill in an empty data directory");
    demo->add_flag("--no-shift", no_shift, "Control run: second phase drawn from the baseline distribution");

    auto* show_config = app.add_subcommand("config", "Print the effective configuration as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const auto config = resolve(global);
        auto& transcript = std::cout;
        using namespace aml::pipeline;
        if (*generate) {
            cmd_generate(config, count, out ? std::optional<std::filesystem::path>(*out) : std::nullopt, transcript);
        } else if (*ingest) {
            cmd_ingest(config, dataset ? std::filesystem::path(*dataset) : config.dataset_path(), transcript);
        } else if (*stream) {
            cmd_stream(config, max_batches, transcript);
        } else if (*train) {
            cmd_train(config, transcript);
        } else if (*report) {
            cmd_report(config, transcript);
        } else if (*demo) {
            const auto result = cmd_demo(config, !no_shift, transcript);
            if (!result.single_active_held) return 1;
        } else if (*show_config) {
            std::cout << to_json(config).dump(2) << "\n";
        }
    } catch (const aml::Error& e) {
        std::cerr << fmt::format("error ({}): {}\n", aml::errc_name(e.code()), e.what());
        return aml::exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << fmt::format("error: {}\n", e.what());
        return 1;
    }
    return 0;
}
