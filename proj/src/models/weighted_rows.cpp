#include "weighted_rows.hpp"

#include <cmath>
#include <cstring>
#include <unordered_map>

#include <fmt/format.h>

#include "aml/common/error.hpp"
#include "aml/common/hash.hpp"

namespace aml::models::detail {

void check_training_input(const Matrix& X, std::span<const std::uint8_t> y) {
    if (X.rows() == 0 || X.cols() == 0) throw Error(Errc::empty_input, "training matrix is empty");
    if (X.rows() != y.size()) {
        throw Error(Errc::invalid_input, fmt::format("{} rows but {} labels", X.rows(), y.size()));
    }
    std::size_t positives = 0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        for (double v : X.row(i)) {
            if (!std::isfinite(v)) throw Error(Errc::invalid_input, fmt::format("non-finite value in row {}", i));
        }
        positives += y[i] ? 1 : 0;
    }
    if (positives == 0 || positives == y.size()) {
        throw Error(Errc::degenerate_class,
                    fmt::format("training labels contain a single class ({} positives of {})", positives, y.size()));
    }
}

WeightedRows compress_rows(const Matrix& X, std::span<const std::uint8_t> y) {
    WeightedRows out;
    out.X = Matrix(0, X.cols());
    out.unique_of.resize(X.rows());
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    const std::size_t bytes = X.cols() * sizeof(double);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto row = X.row(i);
        const std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(row.data()), bytes));
        auto& bucket = buckets[h];
        std::size_t found = out.negative.size();
        for (std::size_t u : bucket) {
            if (std::memcmp(out.X.row(u).data(), row.data(), bytes) == 0) {
                found = u;
                break;
            }
        }
        if (found == out.negative.size()) {
            out.X.append_row(row);
            out.negative.push_back(0.0);
            out.positive.push_back(0.0);
            bucket.push_back(found);
        }
        (y[i] ? out.positive : out.negative)[found] += 1.0;
        out.unique_of[i] = found;
    }
    return out;
}

}  // namespace aml::models::detail
