#include "tree_builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gridseal::ml::detail {

namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity(); // sum_l^2/n_l + sum_r^2/n_r
};

struct NodeStats {
    size_t n = 0;
    double sum = 0.0;
};

bool node_is_pure(const std::vector<double>& y, const std::vector<uint32_t>& idx, size_t begin,
                  size_t end) {
    const double first = y[idx[begin]];
    for (size_t i = begin + 1; i < end; ++i) {
        if (y[idx[i]] != first) return false;
    }
    return true;
}

// Midpoint that is guaranteed to lie strictly above `lo` so `x < threshold`
// sends lo left and hi right even after rounding.
double split_point(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return mid > lo ? mid : hi;
}

void pick_features(int max_features, rng::Xoshiro256* rng, std::array<int, 3>& out, int& count) {
    if (max_features >= 3) {
        out = {0, 1, 2};
        count = 3;
        return;
    }
    std::array<int, 3> pool = {0, 1, 2};
    for (int i = 0; i < max_features; ++i) {
        const auto j = i + static_cast<int>(rng->next_below(3 - i));
        std::swap(pool[i], pool[j]);
    }
    std::sort(pool.begin(), pool.begin() + max_features); // evaluate in ascending order
    out = pool;
    count = max_features;
}

class ExactBuilder {
public:
    ExactBuilder(const Rows& x, const std::vector<double>& y, std::vector<uint32_t> rows,
                 const ExactTreeConfig& cfg)
        : x_(x), y_(y), idx_(std::move(rows)), cfg_(cfg) {}

    Tree build() {
        tree_.clear();
        tree_.emplace_back();
        grow(0, 0, idx_.size(), 0);
        return std::move(tree_);
    }

private:
    void make_leaf(int node, size_t begin, size_t end) {
        double sum = 0.0;
        for (size_t i = begin; i < end; ++i) sum += y_[idx_[i]];
        tree_[node].feature = -1;
        tree_[node].value = sum / static_cast<double>(end - begin);
    }

    SplitChoice best_exact_split(int feature, size_t begin, size_t end, double parent_score) {
        const size_t n = end - begin;
        scratch_.clear();
        scratch_.reserve(n);
        double total = 0.0;
        for (size_t i = begin; i < end; ++i) {
            const uint32_t row = idx_[i];
            scratch_.emplace_back(x_[row][feature], y_[row]);
            total += y_[row];
        }
        std::sort(scratch_.begin(), scratch_.end());

        SplitChoice best;
        double left_sum = 0.0;
        for (size_t i = 1; i < n; ++i) {
            left_sum += scratch_[i - 1].second;
            if (scratch_[i].first == scratch_[i - 1].first) continue;
            const auto n_l = static_cast<double>(i);
            const auto n_r = static_cast<double>(n - i);
            const double right_sum = total - left_sum;
            const double score = left_sum * left_sum / n_l + right_sum * right_sum / n_r;
            if (score > best.score) {
                best.found = score > parent_score;
                best.score = score;
                best.feature = feature;
                best.threshold = split_point(scratch_[i - 1].first, scratch_[i].first);
            }
        }
        return best;
    }

    SplitChoice best_random_split(int feature, size_t begin, size_t end, double parent_score) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (size_t i = begin; i < end; ++i) {
            const double v = x_[idx_[i]][feature];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        SplitChoice best;
        if (!(hi > lo)) return best;

        double u = cfg_.rng->next_unit();
        while (u == 0.0) u = cfg_.rng->next_unit();
        const double threshold = lo + u * (hi - lo);

        NodeStats left, right;
        for (size_t i = begin; i < end; ++i) {
            const uint32_t row = idx_[i];
            NodeStats& side = x_[row][feature] < threshold ? left : right;
            ++side.n;
            side.sum += y_[row];
        }
        if (left.n == 0 || right.n == 0) return best;
        const double score = left.sum * left.sum / static_cast<double>(left.n) +
                             right.sum * right.sum / static_cast<double>(right.n);
        best.found = score > parent_score;
        best.score = score;
        best.feature = feature;
        best.threshold = threshold;
        return best;
    }

    void grow(int node, size_t begin, size_t end, int depth) {
        const size_t n = end - begin;
        if (n < 2 || (cfg_.max_depth > 0 && depth >= cfg_.max_depth) ||
            node_is_pure(y_, idx_, begin, end)) {
            make_leaf(node, begin, end);
            return;
        }

        double total = 0.0;
        for (size_t i = begin; i < end; ++i) total += y_[idx_[i]];
        const double parent_score = total * total / static_cast<double>(n);

        std::array<int, 3> features{};
        int n_features = 0;
        pick_features(cfg_.max_features, cfg_.rng, features, n_features);

        SplitChoice best;
        for (int f = 0; f < n_features; ++f) {
            const SplitChoice candidate =
                cfg_.random_thresholds ? best_random_split(features[f], begin, end, parent_score)
                                       : best_exact_split(features[f], begin, end, parent_score);
            if (candidate.found && candidate.score > best.score) best = candidate;
        }
        if (!best.found) {
            make_leaf(node, begin, end);
            return;
        }

        const int feature = best.feature;
        const double threshold = best.threshold;
        const auto mid_it = std::stable_partition(
            idx_.begin() + static_cast<ptrdiff_t>(begin), idx_.begin() + static_cast<ptrdiff_t>(end),
            [&](uint32_t row) { return x_[row][feature] < threshold; });
        const size_t mid = static_cast<size_t>(mid_it - idx_.begin());

        const auto left = static_cast<int32_t>(tree_.size());
        tree_.emplace_back();
        const auto right = static_cast<int32_t>(tree_.size());
        tree_.emplace_back();
        tree_[node].feature = feature;
        tree_[node].threshold = threshold;
        tree_[node].left = left;
        tree_[node].right = right;

        grow(left, begin, mid, depth + 1);
        grow(right, mid, end, depth + 1);
    }

    const Rows& x_;
    const std::vector<double>& y_;
    std::vector<uint32_t> idx_;
    ExactTreeConfig cfg_;
    Tree tree_;
    std::vector<std::pair<double, double>> scratch_;
};

} // namespace

Tree build_exact_tree(const Rows& x, const std::vector<double>& y, std::vector<uint32_t> rows,
                      const ExactTreeConfig& cfg) {
    if (rows.empty()) throw std::invalid_argument("build_exact_tree: no rows");
    if (cfg.max_features < 3 || cfg.random_thresholds) {
        if (cfg.rng == nullptr) throw std::invalid_argument("build_exact_tree: rng required");
    }
    ExactBuilder builder(x, y, std::move(rows), cfg);
    return builder.build();
}

BinMap compute_bins(const Rows& x, int n_bins) {
    BinMap map;
    const size_t n = x.size();
    std::vector<double> values(n);
    for (int f = 0; f < 3; ++f) {
        for (size_t i = 0; i < n; ++i) values[i] = x[i][f];
        std::sort(values.begin(), values.end());

        std::vector<double> uniques(values);
        uniques.erase(std::unique(uniques.begin(), uniques.end()), uniques.end());

        std::vector<double>& edges = map.edges[f];
        if (uniques.size() <= static_cast<size_t>(n_bins)) {
            for (size_t i = 0; i + 1 < uniques.size(); ++i) {
                edges.push_back(split_point(uniques[i], uniques[i + 1]));
            }
        } else {
            // equal-frequency edges over the raw sorted column
            for (int b = 1; b < n_bins; ++b) {
                const size_t pos = static_cast<size_t>(static_cast<uint64_t>(b) * n / n_bins);
                if (pos == 0 || pos >= n) continue;
                if (values[pos - 1] == values[pos]) continue;
                const double edge = split_point(values[pos - 1], values[pos]);
                if (edges.empty() || edge > edges.back()) edges.push_back(edge);
            }
        }
    }
    return map;
}

namespace {

int bin_of(const std::vector<double>& edges, double v) {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
}

struct HistLeaf {
    int node = -1;
    size_t begin = 0;
    size_t end = 0;
    int depth = 0;
    uint32_t order = 0; // creation order, breaks gain ties
    bool split_found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

} // namespace

Tree build_hist_tree(const Rows& x, const std::vector<double>& y, const BinMap& bins,
                     int max_leaves, int max_depth) {
    const size_t n = x.size();
    if (n == 0) throw std::invalid_argument("build_hist_tree: no rows");

    // pre-bin once per tree; bins are shared across boosting iterations
    std::vector<std::array<uint8_t, 3>> binned(n);
    for (size_t i = 0; i < n; ++i) {
        for (int f = 0; f < 3; ++f) binned[i][f] = static_cast<uint8_t>(bin_of(bins.edges[f], x[i][f]));
    }

    std::vector<uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);

    Tree tree;
    tree.emplace_back();

    std::vector<HistLeaf> leaves;
    uint32_t next_order = 0;
    std::vector<size_t> hist_count;
    std::vector<double> hist_sum;

    auto leaf_value = [&](size_t begin, size_t end) {
        double sum = 0.0;
        for (size_t i = begin; i < end; ++i) sum += y[idx[i]];
        return sum / static_cast<double>(end - begin);
    };

    auto find_best_split = [&](HistLeaf& leaf) {
        leaf.split_found = false;
        const size_t count = leaf.end - leaf.begin;
        if (count < 2 || (max_depth > 0 && leaf.depth >= max_depth)) return;
        if (node_is_pure(y, idx, leaf.begin, leaf.end)) return;

        double total = 0.0;
        for (size_t i = leaf.begin; i < leaf.end; ++i) total += y[idx[i]];
        const double parent_score = total * total / static_cast<double>(count);

        double best_score = parent_score;
        for (int f = 0; f < 3; ++f) {
            const std::vector<double>& edges = bins.edges[f];
            if (edges.empty()) continue;
            const size_t n_edges = edges.size();
            hist_count.assign(n_edges + 1, 0);
            hist_sum.assign(n_edges + 1, 0.0);
            for (size_t i = leaf.begin; i < leaf.end; ++i) {
                const uint32_t row = idx[i];
                const uint8_t b = binned[row][f];
                ++hist_count[b];
                hist_sum[b] += y[row];
            }
            size_t left_n = 0;
            double left_sum = 0.0;
            for (size_t e = 0; e < n_edges; ++e) {
                left_n += hist_count[e];
                left_sum += hist_sum[e];
                if (left_n == 0) continue;
                if (left_n == count) break;
                const double right_sum = total - left_sum;
                const auto n_r = static_cast<double>(count - left_n);
                const double score =
                    left_sum * left_sum / static_cast<double>(left_n) + right_sum * right_sum / n_r;
                if (score > best_score) {
                    best_score = score;
                    leaf.split_found = true;
                    leaf.feature = f;
                    leaf.threshold = edges[e];
                    leaf.gain = score - parent_score;
                }
            }
        }
    };

    HistLeaf root{0, 0, n, 0, next_order++};
    find_best_split(root);
    leaves.push_back(root);
    int n_leaves = 1;

    while (n_leaves < max_leaves) {
        int pick = -1;
        for (int i = 0; i < static_cast<int>(leaves.size()); ++i) {
            if (!leaves[i].split_found) continue;
            if (pick < 0 || leaves[i].gain > leaves[pick].gain ||
                (leaves[i].gain == leaves[pick].gain && leaves[i].order < leaves[pick].order)) {
                pick = i;
            }
        }
        if (pick < 0) break;

        HistLeaf leaf = leaves[pick];
        leaves.erase(leaves.begin() + pick);

        const int feature = leaf.feature;
        const double threshold = leaf.threshold;
        const auto mid_it = std::stable_partition(
            idx.begin() + static_cast<ptrdiff_t>(leaf.begin),
            idx.begin() + static_cast<ptrdiff_t>(leaf.end),
            [&](uint32_t row) { return x[row][feature] < threshold; });
        const size_t mid = static_cast<size_t>(mid_it - idx.begin());

        const auto left = static_cast<int32_t>(tree.size());
        tree.emplace_back();
        const auto right = static_cast<int32_t>(tree.size());
        tree.emplace_back();
        tree[leaf.node].feature = feature;
        tree[leaf.node].threshold = threshold;
        tree[leaf.node].left = left;
        tree[leaf.node].right = right;

        HistLeaf l{left, leaf.begin, mid, leaf.depth + 1, next_order++};
        HistLeaf r{right, mid, leaf.end, leaf.depth + 1, next_order++};
        find_best_split(l);
        find_best_split(r);
        leaves.push_back(l);
        leaves.push_back(r);
        ++n_leaves;
    }

    for (const HistLeaf& leaf : leaves) {
        tree[leaf.node].feature = -1;
        tree[leaf.node].value = leaf_value(leaf.begin, leaf.end);
    }
    return tree;
}

} // namespace gridseal::ml::detail
