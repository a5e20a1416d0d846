#include "aml/models/matrix.hpp"

#include <algorithm>

#include "aml/common/error.hpp"

namespace aml::models {

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw Error(Errc::incompatible, "row width differs from matrix width");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

LabeledData to_labeled(std::span<const featstore::FeatureVector> vectors) {
    LabeledData out;
    const std::size_t width = vectors.empty() ? 0 : vectors.front().values.size();
    out.X = Matrix(vectors.size(), width);
    out.y.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].values.size() != width) throw Error(Errc::incompatible, "ragged feature vectors");
        std::copy(vectors[i].values.begin(), vectors[i].values.end(), out.X.row(i).begin());
        out.y.push_back(vectors[i].label ? 1 : 0);
    }
    return out;
}

LabeledData to_labeled(std::span<const featstore::FeatureVector> vectors, std::span<const std::size_t> positions) {
    LabeledData out;
    const std::size_t width = vectors.empty() ? 0 : vectors.front().values.size();
    out.X = Matrix(positions.size(), width);
    out.y.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto& v = vectors[positions[i]];
        if (v.values.size() != width) throw Error(Errc::incompatible, "ragged feature vectors");
        std::copy(v.values.begin(), v.values.end(), out.X.row(i).begin());
        out.y.push_back(v.label ? 1 : 0);
    }
    return out;
}

}  // namespace aml::models
