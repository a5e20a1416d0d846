#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aml/featstore/schema.hpp"

namespace aml::featstore {

/// Index sets of a train/validation/test partition of {0..n-1}.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

struct SplitSizes {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;

    bool operator==(const SplitSizes&) const = default;
};

/// floor(0.6 n), floor(0.2 n), remainder. Throws Error(too_small) for n < 5.
SplitSizes split_sizes(std::size_t n);

/// Seeded Fisher-Yates permutation of {0..n-1}, sliced train -> validation -> test.
SplitIndices split_indices(std::size_t n, std::uint64_t seed);

struct DatasetSplit {
    std::vector<FeatureVector> train;
    std::vector<FeatureVector> validation;
    std::vector<FeatureVector> test;
    std::uint64_t split_seed = 0;
};

DatasetSplit split(std::vector<FeatureVector> vectors, std::uint64_t seed);

/// Original positions followed by minority-class positions drawn uniformly
/// with replacement until both classes have equal counts. Throws
/// Error(degenerate_class) when a class is absent.
std::vector<std::size_t> oversample_indices(std::span<const std::uint8_t> labels, std::uint64_t seed);

/// Random oversampling to class parity; the input order is preserved and the
/// drawn minority copies are appended.
std::vector<FeatureVector> oversample(std::span<const FeatureVector> train, std::uint64_t seed);

}  // namespace aml::featstore
