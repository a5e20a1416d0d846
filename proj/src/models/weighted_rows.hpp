#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aml/models/matrix.hpp"

namespace aml::models::detail {

/// Distinct rows of a training matrix with per-class multiplicities.
/// One-hot data repeats heavily, so every trainer works on this form;
/// each algorithm is weight-aware, which makes the result identical to
/// training on the expanded rows.
struct WeightedRows {
    Matrix X;
    std::vector<double> negative;
    std::vector<double> positive;
    std::vector<std::size_t> unique_of;  // original row -> unique row
};

WeightedRows compress_rows(const Matrix& X, std::span<const std::uint8_t> y);

/// Throws Error for empty input, length mismatch, non-finite values or a
/// single label class.
void check_training_input(const Matrix& X, std::span<const std::uint8_t> y);

}  // namespace aml::models::detail
