#include "aml/models/model.hpp"
#include <cmath>

#include <fmt/format.h>

#include "aml/common/error.hpp"
#include "aml/common/hash.hpp"

namespace aml::models {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

json node_to_json(const Tree& tree, int i) {
    const TreeNode& n = tree.nodes[i];
    if (n.feature < 0) return json{{"value", n.value}, {"weight", n.weight}};
    return json{{"feature", n.feature},
                {"threshold", n.threshold},
                {"value", n.value},
                {"weight", n.weight},
                {"left", node_to_json(tree, n.left)},
                {"right", node_to_json(tree, n.right)}};
}

int node_from_json(const json& j, Tree& tree) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode node;
    node.value = j.at("value").get<double>();
    node.weight = j.at("weight").get<double>();
    if (j.contains("feature")) {
        node.feature = j.at("feature").get<int>();
        node.threshold = j.at("threshold").get<double>();
        node.left = node_from_json(j.at("left"), tree);
        node.right = node_from_json(j.at("right"), tree);
    }
    tree.nodes[index] = node;
    return index;
}

Tree tree_from_json(const json& j) {
    Tree tree;
    node_from_json(j, tree);
    return tree;
}

}  // namespace

std::string_view kind_name(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::logistic_regression: return "logistic_regression";
        case ModelKind::decision_tree: return "decision_tree";
        case ModelKind::random_forest: return "random_forest";
    }
    return "";
}

ModelKind kind_from_name(std::string_view name) {
    for (auto kind : {ModelKind::logistic_regression, ModelKind::decision_tree, ModelKind::random_forest}) {
        if (kind_name(kind) == name) return kind;
    }
    throw Error(Errc::data, fmt::format("unknown model kind '{}'", name));
}

double predict_row(const TrainedModel& model, std::span<const double> x) {
    if (x.size() != model.width) {
        throw Error(Errc::incompatible,
                    fmt::format("input has {} columns, model expects {}", x.size(), model.width));
    }
    switch (model.kind) {
        case ModelKind::logistic_regression: {
            const auto& p = std::get<LogisticParams>(model.params);
            double z = p.bias;
            for (std::size_t j = 0; j < x.size(); ++j) z += p.weights[j] * x[j];
            return sigmoid(z);
        }
        case ModelKind::decision_tree: return std::get<Tree>(model.params).predict(x);
        case ModelKind::random_forest: {
            const auto& trees = std::get<ForestParams>(model.params).trees;
            double sum = 0.0;
            for (const auto& tree : trees) sum += tree.predict(x);
            return sum / static_cast<double>(trees.size());
        }
    }
    return 0.0;
}

std::vector<double> predict_proba(const TrainedModel& model, const Matrix& X) {
    if (X.cols() != model.width && X.rows() > 0) {
        throw Error(Errc::incompatible, fmt::format("input has {} columns, model expects {}", X.cols(), model.width));
    }
    std::vector<double> out;
    out.reserve(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out.push_back(predict_row(model, X.row(i)));
    return out;
}

std::vector<double> tree_probabilities(const TrainedModel& forest, std::span<const double> x) {
    if (forest.kind != ModelKind::random_forest) throw Error(Errc::invalid_input, "model is not a random forest");
    if (x.size() != forest.width) throw Error(Errc::incompatible, "input width does not match the forest");
    std::vector<double> out;
    for (const auto& tree : std::get<ForestParams>(forest.params).trees) out.push_back(tree.predict(x));
    return out;
}

json to_json(const TrainedModel& model) {
    json parameters;
    switch (model.kind) {
        case ModelKind::logistic_regression: {
            const auto& p = std::get<LogisticParams>(model.params);
            parameters = {{"weights", p.weights}, {"bias", p.bias}, {"iterations", p.iterations}};
            break;
        }
        case ModelKind::decision_tree: parameters = {{"tree", node_to_json(std::get<Tree>(model.params), 0)}}; break;
        case ModelKind::random_forest: {
            json trees = json::array();
            for (const auto& tree : std::get<ForestParams>(model.params).trees) {
                trees.push_back({{"features_used", tree.features_used()}, {"root", node_to_json(tree, 0)}});
            }
            parameters = {{"trees", trees}};
            break;
        }
    }
    return json{{"format_version", kFormatVersion},
                {"kind", kind_name(model.kind)},
                {"schema_hash", hex64(model.schema_hash)},
                {"train_seed", model.train_seed},
                {"width", model.width},
                {"hyperparameters", model.hyperparameters},
                {"parameters", parameters}};
}

TrainedModel model_from_json(const json& j) {
    TrainedModel model;
    try {
        if (j.at("format_version").get<int>() != kFormatVersion) {
            throw Error(Errc::incompatible, "unsupported model format version");
        }
        model.kind = kind_from_name(j.at("kind").get<std::string>());
        model.schema_hash = parse_hex64(j.at("schema_hash").get<std::string>());
        model.train_seed = j.at("train_seed").get<std::uint64_t>();
        model.width = j.at("width").get<std::size_t>();
        model.hyperparameters = j.at("hyperparameters");
        const json& p = j.at("parameters");
        switch (model.kind) {
            case ModelKind::logistic_regression: {
                LogisticParams params;
                params.weights = p.at("weights").get<std::vector<double>>();
                params.bias = p.at("bias").get<double>();
                params.iterations = p.at("iterations").get<int>();
                if (params.weights.size() != model.width) throw Error(Errc::data, "weight count differs from width");
                model.params = std::move(params);
                break;
            }
            case ModelKind::decision_tree: model.params = tree_from_json(p.at("tree")); break;
            case ModelKind::random_forest: {
                ForestParams params;
                for (const auto& t : p.at("trees")) params.trees.push_back(tree_from_json(t.at("root")));
                if (params.trees.empty()) throw Error(Errc::data, "forest without trees");
                model.params = std::move(params);
                break;
            }
        }
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("malformed model document: {}", e.what()));
    }
    return model;
}

}  // namespace aml::models
