#include "aml/featstore/dataset.hpp"

#include <numeric>

#include <fmt/format.h>

#include "aml/common/error.hpp"
#include "aml/common/rng.hpp"

namespace aml::featstore {

SplitSizes split_sizes(std::size_t n) {
    if (n < 5) throw Error(Errc::too_small, fmt::format("cannot split {} rows (need at least 5)", n));
    SplitSizes sizes;
    sizes.train = n * 3 / 5;
    sizes.validation = n / 5;
    sizes.test = n - sizes.train - sizes.validation;
    return sizes;
}

SplitIndices split_indices(std::size_t n, std::uint64_t seed) {
    const SplitSizes sizes = split_sizes(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(order[i], order[j]);
    }
    SplitIndices out;
    const auto train_end = order.begin() + static_cast<std::ptrdiff_t>(sizes.train);
    const auto validation_end = train_end + static_cast<std::ptrdiff_t>(sizes.validation);
    out.train.assign(order.begin(), train_end);
    out.validation.assign(train_end, validation_end);
    out.test.assign(validation_end, order.end());
    return out;
}

DatasetSplit split(std::vector<FeatureVector> vectors, std::uint64_t seed) {
    const SplitIndices idx = split_indices(vectors.size(), seed);
    DatasetSplit out;
    out.split_seed = seed;
    auto take = [&](const std::vector<std::size_t>& positions, std::vector<FeatureVector>& into) {
        into.reserve(positions.size());
        for (std::size_t i : positions) into.push_back(std::move(vectors[i]));
    };
    take(idx.train, out.train);
    take(idx.validation, out.validation);
    take(idx.test, out.test);
    return out;
}

std::vector<std::size_t> oversample_indices(std::span<const std::uint8_t> labels, std::uint64_t seed) {
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? positives : negatives).push_back(i);
    if (positives.empty() || negatives.empty()) {
        throw Error(Errc::degenerate_class,
                    fmt::format("oversampling needs both classes (positives={}, negatives={})", positives.size(),
                                negatives.size()));
    }
    const auto& minority = positives.size() < negatives.size() ? positives : negatives;
    const std::size_t deficit = std::max(positives.size(), negatives.size()) - minority.size();

    std::vector<std::size_t> out(labels.size());
    std::iota(out.begin(), out.end(), std::size_t{0});
    out.reserve(labels.size() + deficit);
    Rng rng(seed);
    for (std::size_t k = 0; k < deficit; ++k) out.push_back(minority[rng.below(minority.size())]);
    return out;
}

std::vector<FeatureVector> oversample(std::span<const FeatureVector> train, std::uint64_t seed) {
    std::vector<std::uint8_t> labels;
    labels.reserve(train.size());
    for (const auto& v : train) labels.push_back(v.label ? 1 : 0);
    const auto indices = oversample_indices(labels, seed);
    std::vector<FeatureVector> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(train[i]);
    return out;
}

}  // namespace aml::featstore
