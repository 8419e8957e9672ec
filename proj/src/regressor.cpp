#include "gridseal/regressor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "gridseal/rng.hpp"
#include "tree_builder.hpp"

namespace gridseal::ml {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Builds trees [0, n_trees) across a small pool; each tree derives its own
// RNG stream from (seed, tree_index) so the result is thread-count agnostic.
void for_each_tree(int n_trees, const std::function<void(int)>& build) {
    const unsigned hw = std::thread::hardware_concurrency();
    const unsigned workers = std::min<unsigned>(hw == 0 ? 1 : hw, static_cast<unsigned>(n_trees));
    if (workers <= 1) {
        for (int t = 0; t < n_trees; ++t) build(t);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int t = next.fetch_add(1); t < n_trees; t = next.fetch_add(1)) build(t);
        });
    }
    for (std::thread& th : pool) th.join();
}

void fit_gradient_boosting(FittedModel& model, const detail::Rows& x, const std::vector<double>& y,
                           bool histogram) {
    const Hyperparams& hp = model.spec.params;
    const size_t n = x.size();

    model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<double> residual(n);
    for (size_t i = 0; i < n; ++i) residual[i] = y[i] - model.base_score;

    detail::BinMap bins;
    if (histogram) bins = detail::compute_bins(x, hp.n_bins);

    std::vector<uint32_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);

    model.trees.reserve(hp.n_trees);
    for (int t = 0; t < hp.n_trees; ++t) {
        Tree tree;
        if (histogram) {
            tree = detail::build_hist_tree(x, residual, bins, hp.max_leaves, hp.max_depth);
        } else {
            detail::ExactTreeConfig cfg;
            cfg.max_depth = hp.max_depth;
            cfg.max_features = 3;
            tree = detail::build_exact_tree(x, residual, all_rows, cfg);
        }
        for (size_t i = 0; i < n; ++i) residual[i] -= hp.learning_rate * tree_predict(tree, x[i]);
        model.trees.push_back(std::move(tree));
    }
}

void fit_forest(FittedModel& model, const detail::Rows& x, const std::vector<double>& y,
                bool extra_trees) {
    const Hyperparams& hp = model.spec.params;
    const auto n = static_cast<uint32_t>(x.size());

    int max_features = hp.max_features;
    if (max_features == 0) max_features = extra_trees ? 3 : static_cast<int>(std::ceil(std::sqrt(3.0)));
    max_features = std::clamp(max_features, 1, 3);

    const bool bootstrap = !extra_trees && hp.bootstrap;

    model.trees.resize(hp.n_trees);
    for_each_tree(hp.n_trees, [&](int t) {
        rng::Xoshiro256 tree_rng(rng::derive_seed(model.spec.seed, static_cast<uint64_t>(t)));
        std::vector<uint32_t> rows;
        rows.reserve(n);
        if (bootstrap) {
            for (uint32_t i = 0; i < n; ++i) rows.push_back(static_cast<uint32_t>(tree_rng.next_below(n)));
        } else {
            rows.resize(n);
            std::iota(rows.begin(), rows.end(), 0);
        }
        detail::ExactTreeConfig cfg;
        cfg.max_depth = hp.max_depth;
        cfg.max_features = max_features;
        cfg.random_thresholds = extra_trees;
        cfg.rng = &tree_rng;
        model.trees[t] = detail::build_exact_tree(x, y, std::move(rows), cfg);
    });
}

void fit_knn(FittedModel& model, const detail::Rows& x, const std::vector<double>& y) {
    const size_t n = x.size();
    require(model.spec.params.k_neighbors <= static_cast<int>(n),
            "fit: k_neighbors exceeds training set size");

    KnnState& state = model.knn;
    for (int f = 0; f < 3; ++f) {
        double sum = 0.0;
        for (size_t i = 0; i < n; ++i) sum += x[i][f];
        const double mean = sum / static_cast<double>(n);
        double var = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double d = x[i][f] - mean;
            var += d * d;
        }
        const double stdev = std::sqrt(var / static_cast<double>(n));
        state.mean[f] = mean;
        state.stdev[f] = stdev;
        state.kept[f] = stdev > 0.0;
    }
    state.rows.resize(n);
    for (size_t i = 0; i < n; ++i) {
        for (int f = 0; f < 3; ++f) {
            state.rows[i][f] = state.kept[f] ? (x[i][f] - state.mean[f]) / state.stdev[f] : 0.0;
        }
    }
    state.targets = y;
}

double predict_knn(const KnnState& state, int k, const std::array<double, 3>& features) {
    std::array<double, 3> q{};
    for (int f = 0; f < 3; ++f) {
        q[f] = state.kept[f] ? (features[f] - state.mean[f]) / state.stdev[f] : 0.0;
    }
    const size_t n = state.rows.size();
    thread_local std::vector<std::pair<double, uint32_t>> dist;
    dist.clear();
    dist.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        double d2 = 0.0;
        for (int f = 0; f < 3; ++f) {
            if (!state.kept[f]) continue;
            const double d = q[f] - state.rows[i][f];
            d2 += d * d;
        }
        dist.emplace_back(d2, static_cast<uint32_t>(i));
    }
    const auto kth = dist.begin() + k;
    std::partial_sort(dist.begin(), kth, dist.end()); // ties resolved by lower row index
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += state.targets[dist[i].second];
    return sum / k;
}

} // namespace

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::gradient_boosting: return "gradient_boosting";
        case ModelKind::hist_gradient_boosting: return "hist_gradient_boosting";
        case ModelKind::random_forest: return "random_forest";
        case ModelKind::extra_trees: return "extra_trees";
        case ModelKind::knn: return "knn";
    }
    throw std::logic_error("to_string: bad ModelKind");
}

ModelKind model_kind_from_string(const std::string& name) {
    for (ModelKind kind : kAllModelKinds) {
        if (name == to_string(kind)) return kind;
    }
    throw std::invalid_argument("unknown model kind '" + name + "'");
}

RegressorSpec RegressorSpec::defaults(ModelKind kind, uint64_t seed) {
    RegressorSpec spec;
    spec.kind = kind;
    spec.seed = seed;
    Hyperparams& hp = spec.params;
    switch (kind) {
        case ModelKind::gradient_boosting:
            hp.max_depth = 3;
            break;
        case ModelKind::hist_gradient_boosting:
            hp.max_depth = 32;
            hp.max_leaves = 31;
            hp.n_bins = 255;
            break;
        case ModelKind::random_forest:
            hp.max_depth = 12;
            hp.bootstrap = true;
            break;
        case ModelKind::extra_trees:
            hp.max_depth = 12;
            hp.bootstrap = false;
            break;
        case ModelKind::knn:
            hp.k_neighbors = 5;
            break;
    }
    return spec;
}

void RegressorSpec::validate() const {
    require(params.n_trees >= 1, "RegressorSpec: n_trees must be >= 1");
    require(params.max_depth >= 1, "RegressorSpec: max_depth must be >= 1");
    require(params.learning_rate >= 0.0 && params.learning_rate <= 1.0,
            "RegressorSpec: learning_rate must be in [0, 1]");
    require(params.max_leaves >= 2, "RegressorSpec: max_leaves must be >= 2");
    require(params.n_bins >= 2 && params.n_bins <= 255, "RegressorSpec: n_bins must be in [2, 255]");
    require(params.k_neighbors >= 1, "RegressorSpec: k_neighbors must be >= 1");
    require(params.max_features >= 0 && params.max_features <= 3,
            "RegressorSpec: max_features must be in [0, 3]");
}

double tree_predict(const Tree& tree, const std::array<double, 3>& x) {
    int node = 0;
    while (!tree[node].is_leaf()) {
        node = x[tree[node].feature] < tree[node].threshold ? tree[node].left : tree[node].right;
    }
    return tree[node].value;
}

double FittedModel::predict(const std::array<double, 3>& features) const {
    for (double v : features) {
        if (!std::isfinite(v)) throw std::invalid_argument("predict: features must be finite");
    }
    switch (spec.kind) {
        case ModelKind::gradient_boosting:
        case ModelKind::hist_gradient_boosting: {
            double acc = base_score;
            for (const Tree& tree : trees) acc += spec.params.learning_rate * tree_predict(tree, features);
            return acc;
        }
        case ModelKind::random_forest:
        case ModelKind::extra_trees: {
            double acc = 0.0;
            for (const Tree& tree : trees) acc += tree_predict(tree, features);
            return acc / static_cast<double>(trees.size());
        }
        case ModelKind::knn:
            return predict_knn(knn, spec.params.k_neighbors, features);
    }
    throw std::logic_error("predict: bad ModelKind");
}

FittedModel fit(const RegressorSpec& spec, const Dataset& train) {
    spec.validate();
    require(train.size() >= 2, "fit: need at least 2 training samples");

    FittedModel model;
    model.spec = spec;

    const detail::Rows x = train.feature_rows();
    const std::vector<double> y = train.targets();

    const auto start = Clock::now();
    switch (spec.kind) {
        case ModelKind::gradient_boosting: fit_gradient_boosting(model, x, y, false); break;
        case ModelKind::hist_gradient_boosting: fit_gradient_boosting(model, x, y, true); break;
        case ModelKind::random_forest: fit_forest(model, x, y, false); break;
        case ModelKind::extra_trees: fit_forest(model, x, y, true); break;
        case ModelKind::knn: fit_knn(model, x, y); break;
    }
    model.train_time_s = seconds_since(start);
    return model;
}

std::vector<double> predict_batch(const FittedModel& model,
                                  const std::vector<std::array<double, 3>>& rows, double* elapsed_s) {
    const auto start = Clock::now();
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(model.predict(row));
    if (elapsed_s != nullptr) *elapsed_s = seconds_since(start);
    return out;
}

RegressionMetrics evaluate(const std::vector<double>& predictions, const std::vector<double>& actuals) {
    require(!predictions.empty(), "evaluate: empty input");
    require(predictions.size() == actuals.size(), "evaluate: length mismatch");

    const auto n = static_cast<double>(predictions.size());
    double abs_sum = 0.0, sq_sum = 0.0, actual_sum = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        const double e = predictions[i] - actuals[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        actual_sum += actuals[i];
    }
    const double actual_mean = actual_sum / n;
    double sst = 0.0;
    for (double a : actuals) {
        const double d = a - actual_mean;
        sst += d * d;
    }
    require(sst > 0.0, "evaluate: actuals have zero variance, R^2 undefined");

    RegressionMetrics m;
    m.mae = abs_sum / n;
    m.mse = sq_sum / n;
    m.rmse = std::sqrt(m.mse);
    m.r2 = 1.0 - sq_sum / sst;
    return m;
}

namespace {

constexpr const char* kModelFormat = "gridseal.model";
constexpr int kModelVersion = 1;

nlohmann::json tree_to_json(const Tree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : tree) {
        nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}, {"v", n.value}});
    }
    return nodes;
}

Tree tree_from_json(const nlohmann::json& nodes) {
    Tree tree;
    tree.reserve(nodes.size());
    for (const auto& jn : nodes) {
        TreeNode n;
        n.feature = jn.at("f").get<int32_t>();
        n.threshold = jn.at("t").get<double>();
        n.left = jn.at("l").get<int32_t>();
        n.right = jn.at("r").get<int32_t>();
        n.value = jn.at("v").get<double>();
        tree.push_back(n);
    }
    return tree;
}

} // namespace

std::string model_to_json(const FittedModel& model) {
    nlohmann::json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["kind"] = to_string(model.spec.kind);
    j["seed"] = model.spec.seed;
    const Hyperparams& hp = model.spec.params;
    j["hyperparams"] = {{"n_trees", hp.n_trees},       {"max_depth", hp.max_depth},
                        {"learning_rate", hp.learning_rate}, {"max_leaves", hp.max_leaves},
                        {"n_bins", hp.n_bins},         {"k_neighbors", hp.k_neighbors},
                        {"bootstrap", hp.bootstrap},   {"max_features", hp.max_features}};
    j["train_time_s"] = model.train_time_s;

    if (model.spec.kind == ModelKind::knn) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : model.knn.rows) rows.push_back({r[0], r[1], r[2]});
        j["state"] = {{"rows", std::move(rows)},
                      {"targets", model.knn.targets},
                      {"mean", {model.knn.mean[0], model.knn.mean[1], model.knn.mean[2]}},
                      {"stdev", {model.knn.stdev[0], model.knn.stdev[1], model.knn.stdev[2]}},
                      {"kept", {model.knn.kept[0], model.knn.kept[1], model.knn.kept[2]}}};
    } else {
        nlohmann::json trees = nlohmann::json::array();
        for (const Tree& tree : model.trees) trees.push_back(tree_to_json(tree));
        j["state"] = {{"base_score", model.base_score}, {"trees", std::move(trees)}};
    }
    return j.dump();
}

FittedModel model_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kModelFormat) {
        throw std::runtime_error("model_from_json: unrecognized format tag");
    }
    if (j.at("version").get<int>() != kModelVersion) {
        throw std::runtime_error("model_from_json: unsupported version");
    }

    FittedModel model;
    model.spec.kind = model_kind_from_string(j.at("kind").get<std::string>());
    model.spec.seed = j.at("seed").get<uint64_t>();
    const nlohmann::json& hp = j.at("hyperparams");
    model.spec.params.n_trees = hp.at("n_trees").get<int>();
    model.spec.params.max_depth = hp.at("max_depth").get<int>();
    model.spec.params.learning_rate = hp.at("learning_rate").get<double>();
    model.spec.params.max_leaves = hp.at("max_leaves").get<int>();
    model.spec.params.n_bins = hp.at("n_bins").get<int>();
    model.spec.params.k_neighbors = hp.at("k_neighbors").get<int>();
    model.spec.params.bootstrap = hp.at("bootstrap").get<bool>();
    model.spec.params.max_features = hp.at("max_features").get<int>();
    model.spec.validate();
    model.train_time_s = j.at("train_time_s").get<double>();

    const nlohmann::json& state = j.at("state");
    if (model.spec.kind == ModelKind::knn) {
        for (const auto& r : state.at("rows")) {
            model.knn.rows.push_back({r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()});
        }
        model.knn.targets = state.at("targets").get<std::vector<double>>();
        for (int f = 0; f < 3; ++f) {
            model.knn.mean[f] = state.at("mean").at(f).get<double>();
            model.knn.stdev[f] = state.at("stdev").at(f).get<double>();
            model.knn.kept[f] = state.at("kept").at(f).get<bool>();
        }
        if (model.knn.rows.size() != model.knn.targets.size()) {
            throw std::runtime_error("model_from_json: knn rows/targets length mismatch");
        }
    } else {
        model.base_score = state.at("base_score").get<double>();
        for (const auto& jt : state.at("trees")) model.trees.push_back(tree_from_json(jt));
    }
    return model;
}

void save_model(const FittedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot open '" + path + "'");
    const std::string text = model_to_json(model);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.put('\n');
    if (!out) throw std::runtime_error("save_model: write failed");
}

FittedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

} // namespace gridseal::ml
