#include "aml/pipeline/config.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "aml/common/error.hpp"
#include "aml/common/files.hpp"

namespace aml::pipeline {

using nlohmann::json;

namespace {

template <typename T>
T get(const json& value, std::string_view path) {
    try {
        return value.get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::config, fmt::format("{}: {}", path, e.what()));
    }
}

void require_object(const json& j, std::string_view path) {
    if (!j.is_object()) throw Error(Errc::config, fmt::format("{} must be a JSON object", path));
}

[[noreturn]] void unknown(std::string_view section, std::string_view key) {
    throw Error(Errc::config, fmt::format("unknown config key '{}{}'", section, key));
}

std::vector<txgen::PlantedRule> rules_from_json(const json& j) {
    txgen::GeneratorConfig scratch;
    txgen::apply_json(scratch, json{{"planted_rules", j}});
    return scratch.planted_rules;
}

json rules_to_json(const std::vector<txgen::PlantedRule>& rules) {
    txgen::GeneratorConfig scratch = txgen::GeneratorConfig::defaults();
    scratch.planted_rules = rules;
    return txgen::to_json(scratch).at("planted_rules");
}

void apply_topic(TopicConfig& c, const json& j) {
    require_object(j, "topic");
    for (const auto& [key, value] : j.items()) {
        if (key == "name") c.name = get<std::string>(value, "topic.name");
        else if (key == "partitions") c.partitions = get<int>(value, "topic.partitions");
        else if (key == "ticks_per_record") c.ticks_per_record = get<std::uint64_t>(value, "topic.ticks_per_record");
        else unknown("topic.", key);
    }
}

void apply_stream(streamproc::StreamConfig& c, const json& j) {
    require_object(j, "stream");
    for (const auto& [key, value] : j.items()) {
        if (key == "group") c.group = get<std::string>(value, "stream.group");
        else if (key == "cadence_ticks") c.cadence_ticks = get<std::uint64_t>(value, "stream.cadence_ticks");
        else if (key == "max_batch_records") c.max_batch_records = get<std::size_t>(value, "stream.max_batch_records");
        else if (key == "rules") streamproc::apply_json(c.rules, value);
        else unknown("stream.", key);
    }
}

void apply_training(TrainingConfig& c, const json& j) {
    require_object(j, "training");
    for (const auto& [key, value] : j.items()) {
        if (key == "threshold") {
            c.threshold = get<double>(value, "training.threshold");
        } else if (key == "logistic") {
            require_object(value, "training.logistic");
            for (const auto& [k, v] : value.items()) {
                if (k == "learning_rate") c.logistic.learning_rate = get<double>(v, "training.logistic.learning_rate");
                else if (k == "tolerance") c.logistic.tolerance = get<double>(v, "training.logistic.tolerance");
                else if (k == "max_iters") c.logistic.max_iters = get<int>(v, "training.logistic.max_iters");
                else if (k == "l2") c.logistic.l2 = get<double>(v, "training.logistic.l2");
                else unknown("training.logistic.", k);
            }
        } else if (key == "tree") {
            require_object(value, "training.tree");
            for (const auto& [k, v] : value.items()) {
                if (k == "max_depth") c.tree.max_depth = get<int>(v, "training.tree.max_depth");
                else if (k == "min_leaf") c.tree.min_leaf = get<double>(v, "training.tree.min_leaf");
                else unknown("training.tree.", k);
            }
        } else if (key == "forest") {
            require_object(value, "training.forest");
            for (const auto& [k, v] : value.items()) {
                if (k == "n_trees") c.forest.n_trees = get<int>(v, "training.forest.n_trees");
                else if (k == "max_depth") c.forest.max_depth = get<int>(v, "training.forest.max_depth");
                else if (k == "min_leaf") c.forest.min_leaf = get<double>(v, "training.forest.min_leaf");
                else if (k == "features_per_split") c.forest.features_per_split = get<int>(v, "training.forest.features_per_split");
                else if (k == "bootstrap") c.forest.bootstrap = get<bool>(v, "training.forest.bootstrap");
                else unknown("training.forest.", k);
            }
        } else {
            unknown("training.", key);
        }
    }
}

void apply_demo(DemoConfig& c, const json& j) {
    require_object(j, "demo");
    for (const auto& [key, value] : j.items()) {
        if (key == "baseline_count") c.baseline_count = get<std::uint64_t>(value, "demo.baseline_count");
        else if (key == "shifted_count") c.shifted_count = get<std::uint64_t>(value, "demo.shifted_count");
        else if (key == "window_size") c.window_size = get<std::uint64_t>(value, "demo.window_size");
        else if (key == "dominant_currency_share") c.dominant_currency_share = get<double>(value, "demo.dominant_currency_share");
        else if (key == "dominant_location_share") c.dominant_location_share = get<double>(value, "demo.dominant_location_share");
        else if (key == "shifted_rules") c.shifted_rules = rules_from_json(value);
        else if (key == "shift_overlay") {
            require_object(value, "demo.shift_overlay");
            c.shift_overlay = value;
        } else {
            unknown("demo.", key);
        }
    }
}

// Gives the heaviest category `share` and rescales the rest to fill 1 - share.
void rescale_dominant(txgen::WeightMap& weights, double share) {
    if (weights.size() < 2) return;
    const auto dominant =
        std::max_element(weights.begin(), weights.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    const double rest = 1.0 - dominant->second;
    const double target_rest = 1.0 - share;
    for (auto it = weights.begin(); it != weights.end(); ++it) {
        if (it == dominant) continue;
        it->second = rest > 0.0 ? it->second * target_rest / rest : target_rest / static_cast<double>(weights.size() - 1);
    }
    dominant->second = share;
}

}  // namespace

DemoConfig DemoConfig::defaults() {
    DemoConfig demo;
    txgen::PlantedRule rule;
    rule.when[txgen::Feature::payment_type] = {"Cheque"};
    rule.when[txgen::Feature::receiver_bank_location] = {"Mexico", "Nigeria"};
    rule.fraud_rate = 0.97;
    demo.shifted_rules.push_back(rule);
    return demo;
}

void PipelineConfig::set_seed(std::uint64_t value) {
    seed = value;
    generator.seed = value;
}

void PipelineConfig::validate() const {
    generator.validate();
    if (topic.name.empty()) throw Error(Errc::config, "topic.name must not be empty");
    if (topic.partitions < 1 || topic.partitions > 1024) throw Error(Errc::config, "topic.partitions must lie in [1, 1024]");
    if (topic.ticks_per_record == 0) throw Error(Errc::config, "topic.ticks_per_record must be positive");
    if (stream.group.empty()) throw Error(Errc::config, "stream.group must not be empty");
    if (stream.cadence_ticks == 0) throw Error(Errc::config, "stream.cadence_ticks must be positive");
    if (stream.max_batch_records == 0) throw Error(Errc::config, "stream.max_batch_records must be positive");
    if (!(training.threshold > 0.0 && training.threshold <= 1.0)) {
        throw Error(Errc::config, "training.threshold must lie in (0, 1]");
    }
    if (!(training.logistic.learning_rate > 0.0) || training.logistic.max_iters < 1 || training.logistic.l2 < 0.0) {
        throw Error(Errc::config, "training.logistic needs learning_rate > 0, max_iters >= 1, l2 >= 0");
    }
    if (training.tree.max_depth < 1 || training.forest.max_depth < 1 || training.forest.n_trees < 1) {
        throw Error(Errc::config, "tree depths and forest size must be positive");
    }
    if (training.tree.min_leaf < 1.0 || training.forest.min_leaf < 1.0 || training.forest.features_per_split < 0) {
        throw Error(Errc::config, "min_leaf must be >= 1 and features_per_split >= 0");
    }
    if (!(f1_guard >= 0.0)) throw Error(Errc::config, "f1_guard must be non-negative");
    if (demo.baseline_count < 5 || demo.shifted_count < 5 || demo.window_size == 0) {
        throw Error(Errc::config, "demo counts must be >= 5 and window_size positive");
    }
    for (double share : {demo.dominant_currency_share, demo.dominant_location_share}) {
        if (!(share > 0.0 && share < 1.0)) throw Error(Errc::config, "demo dominant shares must lie in (0, 1)");
    }
    shifted_generator(generator, demo).validate();
}

void apply_json(PipelineConfig& c, const json& j) {
    require_object(j, "config");
    for (const auto& [key, value] : j.items()) {
        if (key == "data_dir") c.data_dir = get<std::string>(value, "data_dir");
        else if (key == "report_dir") c.report_dir = get<std::string>(value, "report_dir");
        else if (key == "dataset") c.dataset = get<std::string>(value, "dataset");
        else if (key == "seed") c.seed = get<std::uint64_t>(value, "seed");
        else if (key == "generator") txgen::apply_json(c.generator, value);
        else if (key == "topic") apply_topic(c.topic, value);
        else if (key == "stream") apply_stream(c.stream, value);
        else if (key == "training") apply_training(c.training, value);
        else if (key == "drift") lifecycle::apply_json(c.drift, value);
        else if (key == "f1_guard") c.f1_guard = get<double>(value, "f1_guard");
        else if (key == "demo") apply_demo(c.demo, value);
        else unknown("", key);
    }
    // The generator seed follows the pipeline seed unless set explicitly.
    if (j.contains("seed") && !(j.contains("generator") && j.at("generator").contains("seed"))) {
        c.generator.seed = c.seed;
    }
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& path) {
    PipelineConfig config;
    if (path) {
        json j;
        try {
            j = json::parse(read_file(*path));
        } catch (const json::parse_error& e) {
            throw Error(Errc::config, fmt::format("{}: {}", path->string(), e.what()));
        }
        apply_json(config, j);
    }
    config.validate();
    return config;
}

json to_json(const PipelineConfig& c) {
    const auto& t = c.training;
    return json{{"data_dir", c.data_dir.string()},
                {"report_dir", c.report_dir.string()},
                {"dataset", c.dataset.string()},
                {"seed", c.seed},
                {"generator", txgen::to_json(c.generator)},
                {"topic", {{"name", c.topic.name}, {"partitions", c.topic.partitions}, {"ticks_per_record", c.topic.ticks_per_record}}},
                {"stream",
                 {{"group", c.stream.group},
                  {"cadence_ticks", c.stream.cadence_ticks},
                  {"max_batch_records", c.stream.max_batch_records},
                  {"rules", streamproc::to_json(c.stream.rules)}}},
                {"training",
                 {{"threshold", t.threshold},
                  {"logistic",
                   {{"learning_rate", t.logistic.learning_rate},
                    {"tolerance", t.logistic.tolerance},
                    {"max_iters", t.logistic.max_iters},
                    {"l2", t.logistic.l2}}},
                  {"tree", {{"max_depth", t.tree.max_depth}, {"min_leaf", t.tree.min_leaf}}},
                  {"forest",
                   {{"n_trees", t.forest.n_trees},
                    {"max_depth", t.forest.max_depth},
                    {"min_leaf", t.forest.min_leaf},
                    {"features_per_split", t.forest.features_per_split},
                    {"bootstrap", t.forest.bootstrap}}}}},
                {"drift", lifecycle::to_json(c.drift)},
                {"f1_guard", c.f1_guard},
                {"demo",
                 {{"baseline_count", c.demo.baseline_count},
                  {"shifted_count", c.demo.shifted_count},
                  {"window_size", c.demo.window_size},
                  {"dominant_currency_share", c.demo.dominant_currency_share},
                  {"dominant_location_share", c.demo.dominant_location_share},
                  {"shifted_rules", rules_to_json(c.demo.shifted_rules)},
                  {"shift_overlay", c.demo.shift_overlay}}}};
}

txgen::GeneratorConfig shifted_generator(const txgen::GeneratorConfig& base, const DemoConfig& demo) {
    auto shifted = base;
    rescale_dominant(shifted.currency_weights, demo.dominant_currency_share);
    rescale_dominant(shifted.location_weights, demo.dominant_location_share);
    shifted.planted_rules.insert(shifted.planted_rules.begin(), demo.shifted_rules.begin(), demo.shifted_rules.end());
    txgen::apply_json(shifted, demo.shift_overlay);
    return shifted;
}

}  // namespace aml::pipeline
