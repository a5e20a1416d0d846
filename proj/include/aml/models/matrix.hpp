#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aml/featstore/schema.hpp"

namespace aml::models {

/// Dense row-major feature matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

    void append_row(std::span<const double> values);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct LabeledData {
    Matrix X;
    std::vector<std::uint8_t> y;
};

/// Packs feature vectors (optionally a subset, by position) into a matrix.
LabeledData to_labeled(std::span<const featstore::FeatureVector> vectors);
LabeledData to_labeled(std::span<const featstore::FeatureVector> vectors, std::span<const std::size_t> positions);

}  // namespace aml::models
