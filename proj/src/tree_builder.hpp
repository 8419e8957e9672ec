#pragma once

// Internal tree construction shared by the ensemble regressors.

#include <cstdint>
#include <vector>

#include "gridseal/regressor.hpp"
#include "gridseal/rng.hpp"

namespace gridseal::ml::detail {

using Rows = std::vector<std::array<double, 3>>;

struct ExactTreeConfig {
    int max_depth = 0;           // 0 = unbounded
    int max_features = 3;        // candidate features per split
    bool random_thresholds = false; // extra-trees style: one uniform threshold per candidate
    rng::Xoshiro256* rng = nullptr; // required when max_features < 3 or random_thresholds
};

// CART regression tree with variance-reduction splits. Candidate thresholds
// are midpoints of consecutive distinct sorted values; ties go to the lowest
// feature index, then the lowest threshold.
Tree build_exact_tree(const Rows& x, const std::vector<double>& y, std::vector<uint32_t> rows,
                      const ExactTreeConfig& cfg);

// Per-feature histogram bin edges. Thresholds stored in trees are edge
// values, so prediction works on raw features.
struct BinMap {
    std::array<std::vector<double>, 3> edges;
};

BinMap compute_bins(const Rows& x, int n_bins);

// Leaf-wise (best-gain-first) tree over pre-binned features, grown until
// max_leaves or no split improves variance.
Tree build_hist_tree(const Rows& x, const std::vector<double>& y, const BinMap& bins,
                     int max_leaves, int max_depth);

} // namespace gridseal::ml::detail
