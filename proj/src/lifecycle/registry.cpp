#include "aml/lifecycle/registry.hpp"

#include <atomic>

#include <fmt/format.h>

#include "aml/common/error.hpp"
#include "aml/common/hash.hpp"

namespace aml::lifecycle {

using nlohmann::json;

ReferenceProfile build_profile(std::span<const Transaction> transactions) {
    if (transactions.empty()) throw Error(Errc::empty_input, "cannot profile an empty window");
    std::array<std::map<std::string, std::uint64_t>, kFeatureCount> counts;
    for (const auto& t : transactions) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) ++counts[f][t.category(txgen::kFeatures[f])];
    }
    ReferenceProfile profile;
    const auto n = static_cast<double>(transactions.size());
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        for (const auto& [category, count] : counts[f]) profile[f][category] = static_cast<double>(count) / n;
    }
    return profile;
}

json to_json(const ReferenceProfile& profile) {
    json j = json::object();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        j[std::string(txgen::feature_name(txgen::kFeatures[f]))] = profile[f];
    }
    return j;
}

ReferenceProfile profile_from_json(const json& j) {
    ReferenceProfile profile;
    try {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            profile[f] = j.at(std::string(txgen::feature_name(txgen::kFeatures[f]))).get<std::map<std::string, double>>();
        }
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("malformed reference profile: {}", e.what()));
    }
    return profile;
}

std::string_view status_name(ModelStatus status) noexcept {
    switch (status) {
        case ModelStatus::registered: return "registered";
        case ModelStatus::active: return "active";
        case ModelStatus::retired: return "retired";
    }
    return "";
}

namespace {

json event_to_json(const RegistryEvent& e) {
    return nlohmann::ordered_json{{"event", e.event}, {"version", e.version}, {"tick", e.tick}, {"payload", e.payload}};
}

RegistryEvent event_from_json(const json& j) {
    return RegistryEvent{j.at("event").get<std::string>(), j.at("version").get<int>(), j.at("tick").get<std::uint64_t>(),
                         j.at("payload")};
}

}  // namespace

ModelRegistry::ModelRegistry(std::filesystem::path dir, storage::BlobStore& blobs)
    : dir_(std::move(dir)), journal_path_(dir_ / "journal.jsonl"), blobs_(blobs) {
    ensure_directory(dir_);
    auto state = std::make_shared<State>();
    if (std::filesystem::exists(journal_path_)) {
        const std::string text = read_file(journal_path_);
        std::size_t start = 0;
        std::size_t line_no = 0;
        std::size_t intact = 0;
        while (start < text.size()) {
            const auto end = text.find('\n', start);
            if (end == std::string::npos) break;  // torn final line from an interrupted append
            ++line_no;
            try {
                apply(*state, event_from_json(json::parse(text.substr(start, end - start))));
            } catch (const json::exception& e) {
                throw Error(Errc::data, fmt::format("{} line {}: {}", journal_path_.string(), line_no, e.what()));
            }
            start = end + 1;
            intact = start;
        }
        if (intact < text.size()) std::filesystem::resize_file(journal_path_, intact);
    }
    journal_ = AppendFile(journal_path_);
    state_ = std::move(state);
}

void ModelRegistry::apply(State& state, const RegistryEvent& e) {
    if (e.event == "register") {
        if (e.version != static_cast<int>(state.records.size()) + 1) {
            throw Error(Errc::data, fmt::format("journal registers version {} out of sequence", e.version));
        }
        const json& p = e.payload;
        ModelRecord r;
        r.version = e.version;
        r.created_tick = e.tick;
        r.kind = models::kind_from_name(p.at("kind").get<std::string>());
        r.metrics = models::metrics_from_json(p.at("validation"));
        if (!p.at("test").is_null()) r.test_metrics = models::metrics_from_json(p.at("test"));
        r.schema_hash = parse_hex64(p.at("schema_hash").get<std::string>());
        r.schema = featstore::schema_from_json(p.at("schema"));
        r.reference_profile = profile_from_json(p.at("reference_profile"));
        const json& blob = p.at("blob");
        r.blob = {blob.at("ns").get<std::string>(), blob.at("date").get<std::string>(), blob.at("name").get<std::string>()};
        r.train_seed = p.at("train_seed").get<std::uint64_t>();
        state.records.push_back(std::move(r));
    } else if (e.event == "activate") {
        if (e.version < 1 || e.version > static_cast<int>(state.records.size())) {
            throw Error(Errc::data, fmt::format("journal activates unknown version {}", e.version));
        }
        for (auto& r : state.records) {
            if (r.status == ModelStatus::active) r.status = ModelStatus::retired;
        }
        state.records[e.version - 1].status = ModelStatus::active;
        state.active = e.version;
    } else if (e.event == "retire") {
        if (e.version >= 1 && e.version <= static_cast<int>(state.records.size())) {
            state.records[e.version - 1].status = ModelStatus::retired;
            if (state.active == e.version) state.active = 0;
        }
    } else if (e.event != "retrain_failed") {
        throw Error(Errc::data, fmt::format("unknown journal event '{}'", e.event));
    }
    state.events.push_back(e);
}

void ModelRegistry::append(State& next, RegistryEvent event) {
    apply(next, event);
    journal_.append(event_to_json(event).dump() + "\n");
    journal_.sync();
}

std::shared_ptr<const ModelRegistry::State> ModelRegistry::snapshot() const { return std::atomic_load(&state_); }

int ModelRegistry::register_model(const Registration& reg) {
    if (reg.model.schema_hash == 0) throw Error(Errc::invalid_input, "model has no schema hash");
    if (reg.model.schema_hash != reg.schema.hash()) {
        throw Error(Errc::invalid_input, "model schema hash does not match the supplied schema");
    }
    std::lock_guard lock(writer_);
    auto next = std::make_shared<State>(*snapshot());
    const int version = static_cast<int>(next->records.size()) + 1;

    const storage::BlobKey key{"models", reg.date_partition, fmt::format("v{}.json", version)};
    blobs_.put(key, models::to_json(reg.model).dump());

    json payload{{"kind", models::kind_name(reg.model.kind)},
                 {"validation", models::to_json(reg.validation)},
                 {"test", reg.test ? models::to_json(*reg.test) : json(nullptr)},
                 {"schema_hash", hex64(reg.model.schema_hash)},
                 {"schema", featstore::to_json(reg.schema)},
                 {"reference_profile", to_json(reg.profile)},
                 {"blob", {{"ns", key.ns}, {"date", key.date_partition}, {"name", key.name}}},
                 {"train_seed", reg.model.train_seed}};
    append(*next, {"register", version, reg.tick, std::move(payload)});
    std::atomic_store(&state_, std::shared_ptr<const State>(std::move(next)));
    return version;
}

void ModelRegistry::activate(int version, std::uint64_t tick, json payload) {
    std::lock_guard lock(writer_);
    auto next = std::make_shared<State>(*snapshot());
    if (version < 1 || version > static_cast<int>(next->records.size())) {
        throw Error(Errc::not_found, fmt::format("model version {} is not registered", version));
    }
    if (next->active != 0 && next->active != version) {
        append(*next, {"retire", next->active, tick, json{{"replaced_by", version}}});
    }
    append(*next, {"activate", version, tick, std::move(payload)});
    std::atomic_store(&state_, std::shared_ptr<const State>(std::move(next)));
}

void ModelRegistry::record_failure(const std::string& error, std::uint64_t tick, json payload) {
    std::lock_guard lock(writer_);
    auto next = std::make_shared<State>(*snapshot());
    payload["error"] = error;
    append(*next, {"retrain_failed", 0, tick, std::move(payload)});
    std::atomic_store(&state_, std::shared_ptr<const State>(std::move(next)));
}

std::vector<ModelRecord> ModelRegistry::list() const { return snapshot()->records; }

std::optional<ModelRecord> ModelRegistry::find(int version) const {
    const auto state = snapshot();
    if (version < 1 || version > static_cast<int>(state->records.size())) return std::nullopt;
    return state->records[version - 1];
}

ModelRecord ModelRegistry::get(int version) const {
    auto record = find(version);
    if (!record) throw Error(Errc::not_found, fmt::format("model version {} is not registered", version));
    return std::move(*record);
}

std::optional<ModelRecord> ModelRegistry::active() const {
    const auto state = snapshot();
    if (state->active == 0) return std::nullopt;
    return state->records[state->active - 1];
}

std::vector<RegistryEvent> ModelRegistry::events() const { return snapshot()->events; }

models::TrainedModel ModelRegistry::load_model(int version) const {
    const auto record = get(version);
    try {
        return models::model_from_json(json::parse(blobs_.get(record.blob)));
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("model blob {}: {}", record.blob.to_string(), e.what()));
    }
}

}  // namespace aml::lifecycle
