#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "aml/txgen/transaction.hpp"

namespace aml::featstore {

using txgen::Feature;
using txgen::kFeatureCount;
using txgen::Transaction;

using Vocabularies = std::array<std::vector<std::string>, kFeatureCount>;

/// One-hot layout: feature blocks in txgen::kFeatures order, each block's
/// categories sorted lexicographically.
class EncodingSchema {
public:
    EncodingSchema() = default;

    /// Sorts and de-duplicates each vocabulary, then derives width and hash.
    explicit EncodingSchema(Vocabularies vocabularies);

    const Vocabularies& vocabularies() const noexcept { return vocabularies_; }
    const std::vector<std::string>& vocabulary(Feature f) const noexcept {
        return vocabularies_[static_cast<std::size_t>(f)];
    }
    std::size_t total_width() const noexcept { return total_width_; }
    std::uint64_t hash() const noexcept { return hash_; }

    /// First column of a feature's block.
    std::size_t block_offset(Feature f) const noexcept { return offsets_[static_cast<std::size_t>(f)]; }

    /// Column of `category` inside the whole vector, if in vocabulary.
    std::optional<std::size_t> column_of(Feature f, std::string_view category) const;

    /// "feature=category" for every column.
    std::vector<std::string> column_names() const;

    bool operator==(const EncodingSchema& other) const { return vocabularies_ == other.vocabularies_; }

private:
    Vocabularies vocabularies_;
    std::array<std::size_t, kFeatureCount> offsets_{};
    std::size_t total_width_ = 0;
    std::uint64_t hash_ = 0;
};

/// Digest of ordered vocabularies (FNV-1a 64 over a delimited rendering).
std::uint64_t schema_hash(const Vocabularies& vocabularies);

/// Distinct observed values per feature. Throws Error(empty_input) for no rows.
EncodingSchema build_schema(std::span<const Transaction> transactions);

nlohmann::json to_json(const EncodingSchema& schema);

/// Throws Error(data) if the stored hash disagrees with the vocabularies.
EncodingSchema schema_from_json(const nlohmann::json& j);

struct FeatureVector {
    std::vector<double> values;
    bool label = false;

    bool operator==(const FeatureVector&) const = default;
};

/// Writes the one-hot encoding of `t` into `row` (size total_width). A category
/// missing from the schema leaves its block all-zero; returns how many
/// features were unseen.
std::size_t encode_into(const Transaction& t, const EncodingSchema& schema, std::span<double> row);

/// Encodes `t`; unseen categories increment `*unseen` when provided.
FeatureVector encode(const Transaction& t, const EncodingSchema& schema,
                     std::atomic<std::uint64_t>* unseen = nullptr);

/// Recovers the category in each block (nullopt for an all-zero block).
std::array<std::optional<std::string>, kFeatureCount> decode(std::span<const double> values,
                                                               const EncodingSchema& schema);

/// Encoder bound to a schema, counting unseen categories across calls.
class Encoder {
public:
    explicit Encoder(EncodingSchema schema) : schema_(std::move(schema)) {}

    FeatureVector operator()(const Transaction& t) { return encode(t, schema_, &unseen_); }
    std::vector<FeatureVector> encode_all(std::span<const Transaction> transactions);

    std::uint64_t unseen_count() const noexcept { return unseen_.load(); }
    const EncodingSchema& schema() const noexcept { return schema_; }

private:
    EncodingSchema schema_;
    std::atomic<std::uint64_t> unseen_{0};
};

}  // namespace aml::featstore
