#pragma once

// Intent discovery: hierarchical agglomerative clustering (average linkage,
// cosine distance) of same-category refiners, with the cut-off normalized by
// the group's maximum pairwise distance and the per-category epsilon fitted
// by grid search against gold clusters.

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "intentskb/embeddings.hpp"
#include "intentskb/kb.hpp"
#include "intentskb/metrics.hpp"

namespace intentskb {

struct RefinerGroup {
    struct Member {
        std::string label;
        PhraseVector vector;
    };

    EntityType entity_type;
    IntentCategory category = IntentCategory::Other;
    std::vector<Member> members;
};

struct ClusteringParams {
    std::map<IntentCategory, double> epsilon;  // per-category cut-off fraction
    double grid_step = 0.01;
};

// Partition of group member indices. Clusters are ordered by their smallest
// member index; members are ascending within a cluster.
struct ClusterSet {
    std::vector<std::vector<std::size_t>> clusters;
};

inline double distance(const PhraseVector& u, const PhraseVector& v) {
    return 1.0 - cosine(u.vector, v.vector);
}

inline double max_pairwise_distance(const RefinerGroup& group) {
    double max_d = 0.0;
    for (std::size_t i = 0; i < group.members.size(); ++i)
        for (std::size_t j = i + 1; j < group.members.size(); ++j)
            max_d = std::max(
                max_d, distance(group.members[i].vector, group.members[j].vector));
    return max_d;
}

// Average-linkage agglomeration from singletons: repeatedly merge the closest
// pair of clusters while that minimum inter-cluster distance is <= cutoff.
// Linkage updates follow Lance-Williams; equal distances break toward the
// pair with the smallest member indices.
inline ClusterSet hac(const RefinerGroup& group, double cutoff) {
    if (cutoff < 0.0) throw std::invalid_argument("hac cutoff must be >= 0");
    const std::size_t n = group.members.size();

    std::vector<bool> active(n, true);
    std::vector<std::size_t> size(n, 1);
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < n; ++i) members[i] = {i};

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dist[i][j] = dist[j][i] =
                distance(group.members[i].vector, group.members[j].vector);

    while (true) {
        bool found = false;
        std::size_t best_i = 0, best_j = 0;
        double best_d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!active[j]) continue;
                if (!found || dist[i][j] < best_d) {
                    found = true;
                    best_d = dist[i][j];
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (!found || best_d > cutoff) break;

        // Merge j into i (i < j, so the cluster keeps its smallest index).
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == best_i || k == best_j) continue;
            const double merged =
                (static_cast<double>(size[best_i]) * dist[k][best_i] +
                 static_cast<double>(size[best_j]) * dist[k][best_j]) /
                static_cast<double>(size[best_i] + size[best_j]);
            dist[k][best_i] = dist[best_i][k] = merged;
        }
        size[best_i] += size[best_j];
        members[best_i].insert(members[best_i].end(), members[best_j].begin(),
                               members[best_j].end());
        active[best_j] = false;
    }

    ClusterSet out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        std::sort(members[i].begin(), members[i].end());
        out.clusters.push_back(std::move(members[i]));
    }
    return out;
}

// Clusters one (type, category) group at the normalized cut-off
// epsilon_c * M_{c,t}.
inline ClusterSet cluster_group(const RefinerGroup& group,
                                const ClusteringParams& params) {
    const auto it = params.epsilon.find(group.category);
    if (it == params.epsilon.end())
        throw std::invalid_argument("no epsilon for category " +
                                    to_string(group.category));
    const double eps = it->second;
    if (eps < 0.0 || eps > 1.0)
        throw std::invalid_argument("epsilon outside [0,1]");
    return hac(group, eps * max_pairwise_distance(group));
}

struct ClusteringTrainExample {
    RefinerGroup group;
    std::vector<int> gold;  // gold cluster id per member
};

namespace detail {

inline std::vector<int> partition_labels(const ClusterSet& set,
                                         std::size_t member_count) {
    std::vector<int> labels(member_count, -1);
    for (std::size_t c = 0; c < set.clusters.size(); ++c)
        for (std::size_t idx : set.clusters[c])
            labels[idx] = static_cast<int>(c);
    return labels;
}

}  // namespace detail

// Grid search over [0,1] for the epsilon maximizing the mean V-measure of the
// clustering against the gold partitions; ties resolve to the smallest value.
inline double fit_epsilon(const std::vector<ClusteringTrainExample>& training,
                          IntentCategory category, double grid_step) {
    if (training.empty())
        throw std::domain_error("fit_epsilon needs at least one training group");
    if (grid_step <= 0.0 || grid_step > 1.0)
        throw std::invalid_argument("grid_step must be in (0,1]");
    const long long steps = std::llround(1.0 / grid_step);
    if (std::fabs(static_cast<double>(steps) * grid_step - 1.0) > 1e-9)
        throw std::invalid_argument("grid_step must divide 1 evenly");
    for (const auto& ex : training) {
        if (ex.group.category != category)
            throw std::invalid_argument(
                "training group category does not match fit target");
        if (ex.gold.size() != ex.group.members.size())
            throw std::invalid_argument("gold partition size mismatch");
    }

    std::vector<double> max_dist;
    max_dist.reserve(training.size());
    for (const auto& ex : training)
        max_dist.push_back(max_pairwise_distance(ex.group));

    double best_eps = 0.0;
    double best_score = -1.0;
    for (long long i = 0; i <= steps; ++i) {
        const double eps =
            static_cast<double>(i) / static_cast<double>(steps);
        double score_sum = 0.0;
        for (std::size_t g = 0; g < training.size(); ++g) {
            const ClusterSet set = hac(training[g].group, eps * max_dist[g]);
            const std::vector<int> pred = detail::partition_labels(
                set, training[g].group.members.size());
            const auto table =
                ContingencyTable::from_labels(training[g].gold, pred);
            score_sum += homogeneity_completeness_v(table).v_measure;
        }
        const double mean = score_sum / static_cast<double>(training.size());
        if (mean > best_score) {
            best_score = mean;
            best_eps = eps;
        }
    }
    return best_eps;
}

}  // namespace intentskb
