#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hrl/regressor.hpp"

namespace hrl {

struct TreeEnsembleConfig {
    int n_trees = 100;
    int max_depth = -1;  // -1 = unlimited
    std::int64_t min_samples_leaf = 2;
    double feature_fraction = 1.0 / 3.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_trees < 1) throw ContractError("TreeEnsembleConfig: n_trees must be >= 1");
        if (min_samples_leaf < 1)
            throw ContractError("TreeEnsembleConfig: min_samples_leaf must be >= 1");
        if (feature_fraction <= 0.0 || feature_fraction > 1.0)
            throw ContractError("TreeEnsembleConfig: feature_fraction outside (0,1]");
    }
};

/// Bagged randomized regression trees with a variance-reduction split
/// criterion. Training rows are canonicalized by sorting and collapsed into
/// groups of identical inputs, so split search runs over distinct inputs with
/// resampled weights. Results are independent of training-row order.
class RandomForestRegressor final : public Regressor {
  public:
    explicit RandomForestRegressor(TreeEnsembleConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    void fit(const std::vector<std::vector<double>>& inputs,
             const std::vector<double>& targets) override {
        if (inputs.size() != targets.size())
            throw ContractError("RandomForestRegressor: size mismatch");
        if (inputs.empty()) throw ContractError("RandomForestRegressor: empty training set");
        const std::int64_t n = static_cast<std::int64_t>(inputs.size());
        dim_ = static_cast<int>(inputs[0].size());

        // Canonical row order: lexicographic by (input, target).
        std::vector<std::int64_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
            if (inputs[a] != inputs[b]) return inputs[a] < inputs[b];
            return targets[a] < targets[b];
        });
        // Groups = runs of identical inputs in canonical order.
        std::vector<std::int64_t> row_group(n);
        std::vector<const std::vector<double>*> group_x;
        for (std::int64_t i = 0; i < n; ++i) {
            if (i == 0 || inputs[order[i]] != inputs[order[i - 1]])
                group_x.push_back(&inputs[order[i]]);
            row_group[i] = static_cast<std::int64_t>(group_x.size()) - 1;
        }
        const std::int64_t n_groups = static_cast<std::int64_t>(group_x.size());

        trees_.assign(cfg_.n_trees, {});
        std::vector<GroupStats> stats(n_groups);
        for (int t = 0; t < cfg_.n_trees; ++t) {
            Rng rng = make_rng(derive_seed(cfg_.seed, 0x7472u, t));
            std::fill(stats.begin(), stats.end(), GroupStats{});
            std::uniform_int_distribution<std::int64_t> pick(0, n - 1);
            for (std::int64_t i = 0; i < n; ++i) {
                std::int64_t row = pick(rng);
                auto& g = stats[row_group[row]];
                g.weight += 1;
                g.sum += targets[order[row]];
                g.sumsq += targets[order[row]] * targets[order[row]];
            }
            std::vector<std::int64_t> groups;
            for (std::int64_t g = 0; g < n_groups; ++g)
                if (stats[g].weight > 0) groups.push_back(g);
            build_node(trees_[t], groups, group_x, stats, 0, rng);
        }
    }

    double predict(std::span<const double> input) const override {
        if (trees_.empty()) throw ContractError("RandomForestRegressor: not fitted");
        double total = 0.0;
        for (const auto& tree : trees_) {
            int node = 0;
            while (tree[node].feature >= 0)
                node = input[tree[node].feature] <= tree[node].threshold ? tree[node].left
                                                                         : tree[node].right;
            total += tree[node].value;
        }
        return total / trees_.size();
    }

    nlohmann::json to_json() const override {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& tree : trees_) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& nd : tree)
                nodes.push_back({{"f", nd.feature},
                                 {"t", nd.threshold},
                                 {"l", nd.left},
                                 {"r", nd.right},
                                 {"v", nd.value}});
            trees.push_back(nodes);
        }
        return {{"type", "forest"},
                {"dim", dim_},
                {"config",
                 {{"n_trees", cfg_.n_trees},
                  {"max_depth", cfg_.max_depth},
                  {"min_samples_leaf", cfg_.min_samples_leaf},
                  {"feature_fraction", cfg_.feature_fraction},
                  {"seed", cfg_.seed}}},
                {"trees", trees}};
    }

    static std::unique_ptr<RandomForestRegressor> from_json(const nlohmann::json& j) {
        TreeEnsembleConfig cfg;
        const auto& c = j.at("config");
        cfg.n_trees = c.at("n_trees").get<int>();
        cfg.max_depth = c.at("max_depth").get<int>();
        cfg.min_samples_leaf = c.at("min_samples_leaf").get<std::int64_t>();
        cfg.feature_fraction = c.at("feature_fraction").get<double>();
        cfg.seed = c.at("seed").get<std::uint64_t>();
        auto r = std::make_unique<RandomForestRegressor>(cfg);
        r->dim_ = j.at("dim").get<int>();
        for (const auto& tree : j.at("trees")) {
            Tree t;
            for (const auto& nd : tree)
                t.push_back({nd.at("f").get<int>(), nd.at("t").get<double>(),
                             nd.at("l").get<int>(), nd.at("r").get<int>(),
                             nd.at("v").get<double>()});
            r->trees_.push_back(std::move(t));
        }
        return r;
    }

    static RegressorFactory factory(TreeEnsembleConfig cfg = {}) {
        return [cfg](std::uint64_t seed) {
            TreeEnsembleConfig c = cfg;
            c.seed = derive_seed(c.seed, seed);
            return std::make_unique<RandomForestRegressor>(c);
        };
    }

    const TreeEnsembleConfig& config() const { return cfg_; }

  private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };
    using Tree = std::vector<Node>;

    struct GroupStats {
        std::int64_t weight = 0;
        double sum = 0.0;
        double sumsq = 0.0;
    };

    int build_node(Tree& tree, const std::vector<std::int64_t>& groups,
                   const std::vector<const std::vector<double>*>& group_x,
                   const std::vector<GroupStats>& stats, int depth, Rng& rng) const {
        std::int64_t weight = 0;
        double sum = 0.0;
        for (std::int64_t g : groups) {
            weight += stats[g].weight;
            sum += stats[g].sum;
        }
        int idx = static_cast<int>(tree.size());
        tree.push_back({});
        tree[idx].value = sum / weight;

        bool splittable = groups.size() > 1 && weight >= 2 * cfg_.min_samples_leaf &&
                          (cfg_.max_depth < 0 || depth < cfg_.max_depth);
        if (!splittable) return idx;

        // Random feature subset, then exhaustive threshold scan per feature.
        int n_sub = std::max(1, static_cast<int>(std::lround(dim_ * cfg_.feature_fraction)));
        std::vector<int> features(dim_);
        std::iota(features.begin(), features.end(), 0);
        for (int i = 0; i < n_sub; ++i) {
            std::uniform_int_distribution<int> pick(i, dim_ - 1);
            std::swap(features[i], features[pick(rng)]);
        }

        double best_score = std::numeric_limits<double>::infinity();
        int best_feature = -1;
        double best_threshold = 0.0;
        double sumsq = 0.0;
        for (std::int64_t g : groups) sumsq += stats[g].sumsq;
        std::vector<std::int64_t> sorted = groups;
        for (int fi = 0; fi < n_sub; ++fi) {
            int f = features[fi];
            std::sort(sorted.begin(), sorted.end(), [&](std::int64_t a, std::int64_t b) {
                return (*group_x[a])[f] < (*group_x[b])[f];
            });
            std::int64_t wl = 0;
            double sl = 0.0, ssl = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                const auto& gs = stats[sorted[i]];
                wl += gs.weight;
                sl += gs.sum;
                ssl += gs.sumsq;
                double xv = (*group_x[sorted[i]])[f];
                double xn = (*group_x[sorted[i + 1]])[f];
                if (xv == xn) continue;
                std::int64_t wr = weight - wl;
                if (wl < cfg_.min_samples_leaf || wr < cfg_.min_samples_leaf) continue;
                double sr = sum - sl;
                double ssr = sumsq - ssl;
                double score = (ssl - sl * sl / wl) + (ssr - sr * sr / wr);
                if (score < best_score) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = 0.5 * (xv + xn);
                }
            }
        }
        if (best_feature < 0) return idx;

        std::vector<std::int64_t> left, right;
        for (std::int64_t g : groups)
            ((*group_x[g])[best_feature] <= best_threshold ? left : right).push_back(g);
        tree[idx].feature = best_feature;
        tree[idx].threshold = best_threshold;
        int l = build_node(tree, left, group_x, stats, depth + 1, rng);
        int r = build_node(tree, right, group_x, stats, depth + 1, rng);
        tree[idx].left = l;
        tree[idx].right = r;
        return idx;
    }

    TreeEnsembleConfig cfg_;
    int dim_ = 0;
    std::vector<Tree> trees_;
};

/// Builds the ensemble regressor from its config.
inline std::unique_ptr<Regressor> tree_ensemble(const TreeEnsembleConfig& cfg) {
    return std::make_unique<RandomForestRegressor>(cfg);
}

inline std::unique_ptr<Regressor> regressor_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "forest") return RandomForestRegressor::from_json(j);
    if (type == "table") return MemorizingRegressor::from_json(j);
    throw IoError("unknown regressor type: " + type);
}

}  // namespace hrl
