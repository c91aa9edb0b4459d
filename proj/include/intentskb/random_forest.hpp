#pragma once

// Random forest over intent categories: bootstrap-sampled trees with
// axis-aligned Gini splits on random feature subsets of size ceil(sqrt(F)).
// Fully deterministic under a fixed seed.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "intentskb/features.hpp"
#include "intentskb/metrics.hpp"
#include "intentskb/rng.hpp"

namespace intentskb {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<long long, kNumCategories> histogram{};  // leaf class counts
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // root at index 0
};

struct TrainedForest {
    std::vector<DecisionTree> trees;
    int num_trees = 0;
    int max_depth = 0;
    std::uint64_t seed = 0;
    int num_features = 0;
};

struct CategoryPrediction {
    IntentCategory category = IntentCategory::Other;
    double confidence = 0.0;  // fraction of trees voting the category
};

// Pass as max_depth to use the ceil(sqrt(F)) default.
inline constexpr int kAutoDepth = 0;

namespace detail {

inline double gini(const std::array<long long, kNumCategories>& counts,
                   long long total) {
    if (total == 0) return 0.0;
    double sum_sq = 0.0;
    for (long long c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

struct ForestData {
    const std::vector<LabeledInstance>* instances = nullptr;
    int num_features = 0;
    int max_depth = 0;
    int mtry = 0;
};

inline int grow_node(DecisionTree& tree, const ForestData& data,
                     std::vector<std::size_t>& samples, int depth,
                     std::mt19937_64& rng) {
    const auto& instances = *data.instances;
    TreeNode node;
    for (std::size_t idx : samples)
        ++node.histogram[static_cast<std::size_t>(instances[idx].label)];

    long long total = 0;
    int classes_present = 0;
    for (long long c : node.histogram) {
        total += c;
        if (c > 0) ++classes_present;
    }

    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    if (classes_present <= 1 || depth >= data.max_depth || samples.size() < 2)
        return node_index;

    // Candidate features: a fresh random subset per split, index-sorted so
    // tie-breaking is by feature index.
    std::vector<std::size_t> features = sample_indices(
        static_cast<std::size_t>(data.num_features),
        static_cast<std::size_t>(data.mtry), rng);
    std::sort(features.begin(), features.end());

    const double parent_impurity = gini(node.histogram, total);
    double best_impurity = parent_impurity;
    int best_feature = -1;
    double best_threshold = 0.0;
    bool found = false;

    std::vector<std::pair<double, IntentCategory>> column(samples.size());
    for (std::size_t f : features) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& inst = instances[samples[i]];
            column[i] = {inst.features.values[f], inst.label};
        }
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::array<long long, kNumCategories> left_counts{};
        long long left_total = 0;
        for (std::size_t i = 0; i + 1 < column.size(); ++i) {
            ++left_counts[static_cast<std::size_t>(column[i].second)];
            ++left_total;
            if (column[i].first == column[i + 1].first) continue;
            std::array<long long, kNumCategories> right_counts = node.histogram;
            for (std::size_t c = 0; c < kNumCategories; ++c)
                right_counts[c] -= left_counts[c];
            const long long right_total = total - left_total;
            const double impurity =
                (static_cast<double>(left_total) * gini(left_counts, left_total) +
                 static_cast<double>(right_total) *
                     gini(right_counts, right_total)) /
                static_cast<double>(total);
            if (!found || impurity < best_impurity) {
                found = true;
                best_impurity = impurity;
                best_feature = static_cast<int>(f);
                best_threshold = column[i].first +
                                 (column[i + 1].first - column[i].first) / 2.0;
            }
        }
    }
    if (!found) return node_index;  // all candidate features constant

    std::vector<std::size_t> left_samples, right_samples;
    for (std::size_t idx : samples) {
        if (instances[idx].features.values[static_cast<std::size_t>(
                best_feature)] < best_threshold)
            left_samples.push_back(idx);
        else
            right_samples.push_back(idx);
    }
    if (left_samples.empty() || right_samples.empty())
        return node_index;  // degenerate midpoint, keep the leaf

    tree.nodes[node_index].feature = best_feature;
    tree.nodes[node_index].threshold = best_threshold;
    const int left = grow_node(tree, data, left_samples, depth + 1, rng);
    tree.nodes[node_index].left = left;
    const int right = grow_node(tree, data, right_samples, depth + 1, rng);
    tree.nodes[node_index].right = right;
    return node_index;
}

inline const TreeNode& descend(const DecisionTree& tree,
                               const FeatureVector& features) {
    const TreeNode* node = &tree.nodes.front();
    while (node->feature >= 0) {
        const double v = features.values[static_cast<std::size_t>(node->feature)];
        node = v < node->threshold ? &tree.nodes[static_cast<std::size_t>(node->left)]
                                   : &tree.nodes[static_cast<std::size_t>(node->right)];
    }
    return *node;
}

}  // namespace detail

inline int default_max_depth(int num_features) {
    return static_cast<int>(
        std::ceil(std::sqrt(static_cast<double>(num_features))));
}

inline TrainedForest train_forest(const std::vector<LabeledInstance>& instances,
                                  int num_trees, int max_depth,
                                  std::uint64_t seed) {
    if (instances.empty())
        throw std::invalid_argument("cannot train on an empty instance set");
    if (num_trees < 1) throw std::invalid_argument("num_trees must be >= 1");
    const std::size_t num_features = instances.front().features.values.size();
    if (num_features == 0)
        throw std::invalid_argument("instances carry no features");
    for (const auto& inst : instances)
        if (inst.features.values.size() != num_features)
            throw std::invalid_argument("inconsistent feature dimensions");

    TrainedForest forest;
    forest.num_trees = num_trees;
    forest.seed = seed;
    forest.num_features = static_cast<int>(num_features);
    forest.max_depth = max_depth == kAutoDepth
                           ? default_max_depth(forest.num_features)
                           : max_depth;

    detail::ForestData data;
    data.instances = &instances;
    data.num_features = forest.num_features;
    data.max_depth = forest.max_depth;
    data.mtry = static_cast<int>(
        std::ceil(std::sqrt(static_cast<double>(num_features))));

    std::mt19937_64 forest_rng(seed);
    std::vector<std::uint64_t> tree_seeds(static_cast<std::size_t>(num_trees));
    for (auto& s : tree_seeds) s = forest_rng();

    forest.trees.resize(static_cast<std::size_t>(num_trees));
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        std::mt19937_64 rng(tree_seeds[t]);
        std::vector<std::size_t> bootstrap(instances.size());
        for (auto& idx : bootstrap)
            idx = static_cast<std::size_t>(
                detail::uniform_below(rng, instances.size()));
        detail::grow_node(forest.trees[t], data, bootstrap, 0, rng);
    }
    return forest;
}

inline CategoryPrediction predict(const TrainedForest& forest,
                                  const FeatureVector& features) {
    if (static_cast<int>(features.values.size()) != forest.num_features)
        throw std::domain_error("feature dimension does not match forest");

    std::array<long long, kNumCategories> votes{};
    std::array<long long, kNumCategories> leaf_mass{};
    for (const auto& tree : forest.trees) {
        const TreeNode& leaf = detail::descend(tree, features);
        std::size_t best = 0;
        for (std::size_t c = 1; c < kNumCategories; ++c)
            if (leaf.histogram[c] > leaf.histogram[best]) best = c;
        ++votes[best];
        for (std::size_t c = 0; c < kNumCategories; ++c)
            leaf_mass[c] += leaf.histogram[c];
    }

    // Plurality vote; ties prefer the category with more total leaf mass,
    // then the fixed enum order.
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumCategories; ++c) {
        if (votes[c] > votes[best] ||
            (votes[c] == votes[best] && leaf_mass[c] > leaf_mass[best]))
            best = c;
    }
    CategoryPrediction out;
    out.category = static_cast<IntentCategory>(best);
    out.confidence = static_cast<double>(votes[best]) /
                     static_cast<double>(forest.num_trees);
    return out;
}

// Micro-averaged accuracy over stratified held-out folds; the fold partition
// is shared with the clustering evaluation through make_folds.
inline double cross_validate(const std::vector<LabeledInstance>& instances,
                             int k, std::uint64_t seed, int num_trees = 100,
                             int max_depth = kAutoDepth) {
    if (k < 2) throw std::invalid_argument("fold count must be >= 2");
    if (instances.size() < static_cast<std::size_t>(k))
        throw std::invalid_argument("fewer instances than folds");

    std::vector<std::string> labels;
    labels.reserve(instances.size());
    for (const auto& inst : instances) labels.push_back(to_string(inst.label));
    const std::vector<int> fold = make_folds(labels, k, seed);

    std::size_t correct = 0;
    for (int f = 0; f < k; ++f) {
        std::vector<LabeledInstance> train;
        std::vector<std::size_t> held_out;
        for (std::size_t i = 0; i < instances.size(); ++i) {
            if (fold[i] == f)
                held_out.push_back(i);
            else
                train.push_back(instances[i]);
        }
        if (held_out.empty()) continue;
        const TrainedForest forest = train_forest(
            train, num_trees, max_depth,
            seed + 1000003ULL * static_cast<std::uint64_t>(f + 1));
        for (std::size_t i : held_out)
            if (predict(forest, instances[i].features).category ==
                instances[i].label)
                ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(instances.size());
}

}  // namespace intentskb
