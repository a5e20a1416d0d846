#include "aml/featstore/schema.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "aml/common/error.hpp"
#include "aml/common/hash.hpp"

namespace aml::featstore {

using nlohmann::json;

std::uint64_t schema_hash(const Vocabularies& vocabularies) {
    std::uint64_t h = fnv1a64("aml-onehot-v1");
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        h = fnv1a64(txgen::feature_name(txgen::kFeatures[f]), h);
        h = fnv1a64("\x1d", h);
        for (const auto& category : vocabularies[f]) {
            h = fnv1a64(category, h);
            h = fnv1a64("\x1f", h);
        }
        h = fnv1a64("\x1e", h);
    }
    return h;
}

EncodingSchema::EncodingSchema(Vocabularies vocabularies) : vocabularies_(std::move(vocabularies)) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        auto& vocab = vocabularies_[f];
        std::sort(vocab.begin(), vocab.end());
        vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
        offsets_[f] = total_width_;
        total_width_ += vocab.size();
    }
    hash_ = schema_hash(vocabularies_);
}

std::optional<std::size_t> EncodingSchema::column_of(Feature f, std::string_view category) const {
    const auto& vocab = vocabulary(f);
    auto it = std::lower_bound(vocab.begin(), vocab.end(), category);
    if (it == vocab.end() || *it != category) return std::nullopt;
    return block_offset(f) + static_cast<std::size_t>(it - vocab.begin());
}

std::vector<std::string> EncodingSchema::column_names() const {
    std::vector<std::string> names;
    names.reserve(total_width_);
    for (Feature f : txgen::kFeatures) {
        for (const auto& category : vocabulary(f)) names.push_back(fmt::format("{}={}", txgen::feature_name(f), category));
    }
    return names;
}

EncodingSchema build_schema(std::span<const Transaction> transactions) {
    if (transactions.empty()) throw Error(Errc::empty_input, "cannot build an encoding schema from an empty dataset");
    std::array<std::set<std::string, std::less<>>, kFeatureCount> seen;
    for (const auto& t : transactions) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            const auto& value = t.category(txgen::kFeatures[f]);
            if (!seen[f].contains(value)) seen[f].insert(value);
        }
    }
    Vocabularies vocabularies;
    for (std::size_t f = 0; f < kFeatureCount; ++f) vocabularies[f].assign(seen[f].begin(), seen[f].end());
    return EncodingSchema(std::move(vocabularies));
}

json to_json(const EncodingSchema& schema) {
    json features = json::array();
    for (Feature f : txgen::kFeatures) {
        features.push_back({{"name", txgen::feature_name(f)}, {"vocabulary", schema.vocabulary(f)}});
    }
    return json{{"encoding", "one-hot"},
                {"features", features},
                {"total_width", schema.total_width()},
                {"schema_hash", hex64(schema.hash())}};
}

EncodingSchema schema_from_json(const json& j) {
    Vocabularies vocabularies;
    try {
        const auto& features = j.at("features");
        if (!features.is_array() || features.size() != kFeatureCount) {
            throw Error(Errc::data, "schema must list exactly five features");
        }
        for (const auto& entry : features) {
            const Feature f = txgen::feature_from_name(entry.at("name").get<std::string>());
            vocabularies[static_cast<std::size_t>(f)] = entry.at("vocabulary").get<std::vector<std::string>>();
        }
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("malformed encoding schema: {}", e.what()));
    }
    EncodingSchema schema(std::move(vocabularies));
    if (j.contains("schema_hash") && parse_hex64(j.at("schema_hash").get<std::string>()) != schema.hash()) {
        throw Error(Errc::data, "encoding schema hash does not match its vocabularies");
    }
    return schema;
}

std::size_t encode_into(const Transaction& t, const EncodingSchema& schema, std::span<double> row) {
    std::fill(row.begin(), row.end(), 0.0);
    std::size_t unseen = 0;
    for (Feature f : txgen::kFeatures) {
        if (auto column = schema.column_of(f, t.category(f))) {
            row[*column] = 1.0;
        } else {
            ++unseen;
        }
    }
    return unseen;
}

FeatureVector encode(const Transaction& t, const EncodingSchema& schema, std::atomic<std::uint64_t>* unseen) {
    FeatureVector v;
    v.values.resize(schema.total_width());
    const std::size_t missing = encode_into(t, schema, v.values);
    if (unseen && missing) unseen->fetch_add(missing);
    v.label = t.is_laundering;
    return v;
}

std::array<std::optional<std::string>, kFeatureCount> decode(std::span<const double> values,
                                                               const EncodingSchema& schema) {
    if (values.size() != schema.total_width()) {
        throw Error(Errc::incompatible, fmt::format("vector width {} does not match schema width {}", values.size(),
                                                    schema.total_width()));
    }
    std::array<std::optional<std::string>, kFeatureCount> out;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const Feature feature = txgen::kFeatures[f];
        const auto& vocab = schema.vocabulary(feature);
        const std::size_t offset = schema.block_offset(feature);
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            if (values[offset + i] != 0.0) {
                out[f] = vocab[i];
                break;
            }
        }
    }
    return out;
}

std::vector<FeatureVector> Encoder::encode_all(std::span<const Transaction> transactions) {
    std::vector<FeatureVector> out;
    out.reserve(transactions.size());
    for (const auto& t : transactions) out.push_back((*this)(t));
    return out;
}

}  // namespace aml::featstore
