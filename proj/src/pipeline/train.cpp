#include <algorithm>
#include <array>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "aml/common/calendar.hpp"
#include "aml/common/error.hpp"
#include "aml/common/hash.hpp"
#include "aml/common/rng.hpp"
#include "aml/pipeline/commands.hpp"

namespace aml::pipeline {

using nlohmann::json;
using models::ModelKind;

namespace {

constexpr std::array<ModelKind, 3> kAllKinds{ModelKind::logistic_regression, ModelKind::decision_tree,
                                             ModelKind::random_forest};

models::LabeledData encode_rows(std::span<const txgen::Transaction> transactions, std::span<const std::size_t> positions,
                                const featstore::EncodingSchema& schema) {
    models::LabeledData data;
    data.X = models::Matrix(positions.size(), schema.total_width());
    data.y.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto& t = transactions[positions[i]];
        featstore::encode_into(t, schema, data.X.row(i));
        data.y.push_back(t.is_laundering ? 1 : 0);
    }
    return data;
}

}  // namespace

TrainingRun train_models(std::span<const txgen::Transaction> transactions, const TrainingConfig& training,
                         std::uint64_t seed, std::span<const ModelKind> kinds) {
    TrainingRun run;
    run.schema = featstore::build_schema(transactions);
    run.sizes = featstore::split_sizes(transactions.size());
    const auto split = featstore::split_indices(transactions.size(), derive_seed(seed, 1));

    std::vector<std::uint8_t> train_labels;
    std::vector<txgen::Transaction> train_rows;
    train_labels.reserve(split.train.size());
    train_rows.reserve(split.train.size());
    for (auto i : split.train) {
        train_labels.push_back(transactions[i].is_laundering ? 1 : 0);
        train_rows.push_back(transactions[i]);
    }
    run.profile = lifecycle::build_profile(train_rows);

    auto positions = featstore::oversample_indices(train_labels, derive_seed(seed, 2));
    for (auto& p : positions) p = split.train[p];
    run.oversampled_rows = positions.size();

    const auto train = encode_rows(transactions, positions, run.schema);
    const auto validation = encode_rows(transactions, split.validation, run.schema);
    const auto test = encode_rows(transactions, split.test, run.schema);

    for (const auto kind : kinds) {
        models::TrainedModel model;
        switch (kind) {
            case ModelKind::logistic_regression: model = models::train_logistic(train.X, train.y, training.logistic); break;
            case ModelKind::decision_tree: model = models::train_tree(train.X, train.y, training.tree); break;
            case ModelKind::random_forest: {
                auto hyper = training.forest;
                hyper.seed = derive_seed(seed, 3);
                model = models::train_forest(train.X, train.y, hyper);
                break;
            }
        }
        model.schema_hash = run.schema.hash();
        model.train_seed = seed;
        TrainedKind trained{std::move(model), {}, {}};
        trained.validation =
            models::evaluate(models::predict_proba(trained.model, validation.X), validation.y, training.threshold);
        trained.test = models::evaluate(models::predict_proba(trained.model, test.X), test.y, training.threshold);
        run.models.push_back(std::move(trained));
    }
    return run;
}

TrainResult train_and_register(Workspace& workspace, std::span<const txgen::Transaction> transactions,
                               std::ostream& transcript) {
    const auto& config = workspace.config();
    TrainResult result;
    result.run = train_models(transactions, config.training, config.seed, kAllKinds);
    const auto& run = result.run;
    fmt::print(transcript, "train: {} rows, width {}, split {}/{}/{}, oversampled train {}\n", transactions.size(),
               run.schema.total_width(), run.sizes.train, run.sizes.validation, run.sizes.test, run.oversampled_rows);

    std::int64_t last_day = 1;
    for (const auto& t : transactions) last_day = std::max(last_day, t.day());
    const std::uint64_t tick = workspace.has_log() ? workspace.log().clock() : 0;
    auto& registry = workspace.registry();

    std::vector<storage::Row> metric_rows;
    std::size_t best = 0;
    for (std::size_t i = 0; i < run.models.size(); ++i) {
        const auto& m = run.models[i];
        const int version = registry.register_model(
            {m.model, run.schema, m.validation, m.test, run.profile, tick, iso_date(last_day)});
        result.versions.push_back(version);
        if (m.validation.f1 > run.models[best].validation.f1) best = i;
        fmt::print(transcript, "  v{} {:<20} validation acc {:.6f} f1 {:.6f} | test acc {:.6f} f1 {:.6f}\n", version,
                   models::kind_name(m.model.kind), m.validation.accuracy, m.validation.f1, m.test.accuracy, m.test.f1);
        for (const auto& [split, metrics] : {std::pair{"validation", m.validation}, std::pair{"test", m.test}}) {
            const auto& c = metrics.confusion;
            metric_rows.push_back({{"key", fmt::format("v{}/{}", version, split)},
                                   {"version", static_cast<std::int64_t>(version)},
                                   {"kind", std::string(models::kind_name(m.model.kind))},
                                   {"split", std::string(split)},
                                   {"threshold", metrics.threshold},
                                   {"accuracy", metrics.accuracy},
                                   {"f1", metrics.f1},
                                   {"tn", static_cast<std::int64_t>(c.tn)},
                                   {"fp", static_cast<std::int64_t>(c.fp)},
                                   {"fn", static_cast<std::int64_t>(c.fn)},
                                   {"tp", static_cast<std::int64_t>(c.tp)}});
        }
    }
    result.active_version = result.versions[best];
    registry.activate(result.active_version, tick, json{{"reason", "train"}, {"best_by", "validation_f1"}});
    workspace.tables().upsert_rows("metrics", metric_rows);
    fmt::print(transcript, "  active: v{} ({})\n", result.active_version,
               models::kind_name(run.models[best].model.kind));

    const auto dir = workspace.train_dir();
    ensure_directory(dir);
    write_file_atomic(dir / "schema.json", featstore::to_json(run.schema).dump(2) + "\n");

    std::string csv = "model,accuracy,f1\n";
    json models_json = json::array();
    for (std::size_t i = 0; i < run.models.size(); ++i) {
        const auto& m = run.models[i];
        csv += models::metrics_csv_row(models::kind_name(m.model.kind), m.test) + "\n";
        models_json.push_back({{"kind", models::kind_name(m.model.kind)},
                               {"version", result.versions[i]},
                               {"validation", models::to_json(m.validation)},
                               {"test", models::to_json(m.test)}});
    }
    write_file_atomic(dir / "model_metrics.csv", csv);
    const json summary{{"rows", transactions.size()},
                       {"schema_hash", hex64(run.schema.hash())},
                       {"width", run.schema.total_width()},
                       {"split", {{"train", run.sizes.train}, {"validation", run.sizes.validation}, {"test", run.sizes.test}}},
                       {"oversampled_rows", run.oversampled_rows},
                       {"seed", config.seed},
                       {"models", models_json},
                       {"active_version", result.active_version}};
    write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
    return result;
}

TrainResult cmd_train(const PipelineConfig& config, std::ostream& transcript) {
    Workspace workspace(config);
    const auto transactions = load_transactions(workspace);
    return train_and_register(workspace, transactions, transcript);
}

}  // namespace aml::pipeline
