#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gridseal/dataset.hpp"

namespace gridseal::ml {

enum class ModelKind {
    gradient_boosting,
    hist_gradient_boosting, // histogram-binned, leaf-wise GBDT
    random_forest,
    extra_trees,
    knn,
};

inline constexpr std::array<ModelKind, 5> kAllModelKinds = {
    ModelKind::gradient_boosting, ModelKind::hist_gradient_boosting, ModelKind::random_forest,
    ModelKind::extra_trees, ModelKind::knn};

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct Hyperparams {
    int n_trees = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    int max_leaves = 31;    // leaf-wise variant only
    int n_bins = 255;       // histogram variant only
    int k_neighbors = 5;    // knn only
    bool bootstrap = true;  // random_forest only
    int max_features = 0;   // features tried per split; 0 = kind default
};

struct RegressorSpec {
    ModelKind kind = ModelKind::random_forest;
    Hyperparams params;
    uint64_t seed = 0;

    // Pinned reference configuration per kind.
    static RegressorSpec defaults(ModelKind kind, uint64_t seed);
    void validate() const; // throws std::invalid_argument

    bool operator==(const RegressorSpec&) const = default;
};

// Flat binary tree; node 0 is the root. feature < 0 marks a leaf.
struct TreeNode {
    int32_t feature = -1;
    double threshold = 0.0;
    int32_t left = -1;
    int32_t right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

using Tree = std::vector<TreeNode>;

double tree_predict(const Tree& tree, const std::array<double, 3>& x);

struct KnnState {
    std::vector<std::array<double, 3>> rows; // standardized training features
    std::vector<double> targets;
    std::array<double, 3> mean{};
    std::array<double, 3> stdev{};
    std::array<bool, 3> kept{}; // zero-variance features drop out of the distance

    bool operator==(const KnnState&) const = default;
};

struct FittedModel {
    RegressorSpec spec;
    double base_score = 0.0;  // boosting variants
    std::vector<Tree> trees;  // tree ensembles
    KnnState knn;             // knn only
    double train_time_s = 0.0;

    double predict(const std::array<double, 3>& features) const;
};

// Deterministic training: identical (spec, train) always produces identical
// predictions, regardless of thread count.
FittedModel fit(const RegressorSpec& spec, const Dataset& train);

std::vector<double> predict_batch(const FittedModel& model,
                                  const std::vector<std::array<double, 3>>& rows,
                                  double* elapsed_s = nullptr);

struct RegressionMetrics {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
};

RegressionMetrics evaluate(const std::vector<double>& predictions, const std::vector<double>& actuals);

// Versioned JSON persistence; loading restores predictions bit-exactly.
std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);
void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

} // namespace gridseal::ml
