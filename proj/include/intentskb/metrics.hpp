#pragma once

// Evaluation machinery: clustering metrics, agreement statistics, fold
// handling and stratified confidence-bucket sampling.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "intentskb/kb.hpp"
#include "intentskb/rng.hpp"

namespace intentskb {

// ---------------------------------------------------------------------------
// Homogeneity / completeness / V-measure

struct ContingencyTable {
    std::vector<std::vector<long long>> counts;  // [class][cluster]
    long long n = 0;

    static ContingencyTable from_counts(
        std::vector<std::vector<long long>> counts) {
        ContingencyTable t;
        t.counts = std::move(counts);
        const std::size_t cols =
            t.counts.empty() ? 0 : t.counts.front().size();
        for (const auto& row : t.counts) {
            if (row.size() != cols)
                throw std::invalid_argument("ragged contingency table");
            for (long long c : row) {
                if (c < 0)
                    throw std::invalid_argument("negative contingency cell");
                t.n += c;
            }
        }
        if (t.n < 1) throw std::invalid_argument("empty contingency table");
        return t;
    }

    template <typename Label>
    static ContingencyTable from_labels(const std::vector<Label>& gold,
                                        const std::vector<Label>& predicted) {
        if (gold.size() != predicted.size())
            throw std::invalid_argument("label sequences differ in length");
        std::map<Label, std::size_t> class_ids, cluster_ids;
        for (const auto& g : gold)
            class_ids.emplace(g, class_ids.size());
        for (const auto& p : predicted)
            cluster_ids.emplace(p, cluster_ids.size());
        std::vector<std::vector<long long>> counts(
            class_ids.size(), std::vector<long long>(cluster_ids.size(), 0));
        for (std::size_t i = 0; i < gold.size(); ++i)
            ++counts[class_ids[gold[i]]][cluster_ids[predicted[i]]];
        return from_counts(std::move(counts));
    }

    ContingencyTable transposed() const {
        ContingencyTable t;
        t.n = n;
        const std::size_t rows = counts.size();
        const std::size_t cols = rows ? counts.front().size() : 0;
        t.counts.assign(cols, std::vector<long long>(rows, 0));
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) t.counts[j][i] = counts[i][j];
        return t;
    }
};

struct ClusteringScores {
    double homogeneity = 0.0;
    double completeness = 0.0;
    double v_measure = 0.0;
};

namespace detail {

// Conditional entropy terms are accumulated in the same order as the
// marginal entropy so the degenerate single-cluster table gives exactly 0.
inline double class_entropy(const ContingencyTable& t) {
    const double n = static_cast<double>(t.n);
    double h = 0.0;
    for (const auto& row : t.counts) {
        long long total = 0;
        for (long long c : row) total += c;
        if (total > 0) {
            const double p = static_cast<double>(total) / n;
            h -= p * std::log(p);
        }
    }
    return h;
}

inline double class_given_cluster_entropy(const ContingencyTable& t) {
    const double n = static_cast<double>(t.n);
    const std::size_t cols = t.counts.empty() ? 0 : t.counts.front().size();
    double h = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        long long cluster_total = 0;
        for (const auto& row : t.counts) cluster_total += row[j];
        if (cluster_total == 0) continue;
        for (const auto& row : t.counts) {
            if (row[j] > 0) {
                const double p = static_cast<double>(row[j]) / n;
                h -= p * std::log(static_cast<double>(row[j]) /
                                  static_cast<double>(cluster_total));
            }
        }
    }
    return h;
}

}  // namespace detail

inline ClusteringScores homogeneity_completeness_v(const ContingencyTable& t) {
    const double h_class = detail::class_entropy(t);
    const double h_class_k = detail::class_given_cluster_entropy(t);
    const ContingencyTable tt = t.transposed();
    const double h_cluster = detail::class_entropy(tt);
    const double h_cluster_c = detail::class_given_cluster_entropy(tt);

    ClusteringScores s;
    s.homogeneity = h_class == 0.0 ? 1.0 : 1.0 - h_class_k / h_class;
    s.completeness = h_cluster == 0.0 ? 1.0 : 1.0 - h_cluster_c / h_cluster;
    s.v_measure = (s.homogeneity == 0.0 && s.completeness == 0.0)
                      ? 0.0
                      : 2.0 * s.homogeneity * s.completeness /
                            (s.homogeneity + s.completeness);
    return s;
}

// ---------------------------------------------------------------------------
// Flattening

// Merges the per-category partitions of one type into a single partition of
// its refiners. Cluster identities are preserved; a refiner appearing under
// two categories violates the upstream single-category contract.
inline std::vector<std::vector<std::string>> flatten(
    const std::map<IntentCategory, std::vector<std::vector<std::string>>>&
        by_category) {
    std::vector<std::vector<std::string>> out;
    std::set<std::string> seen;
    for (const auto& [category, clusters] : by_category) {
        for (const auto& cluster : clusters) {
            for (const auto& member : cluster)
                if (!seen.insert(member).second)
                    throw std::invalid_argument(
                        "refiner '" + member +
                        "' appears under more than one category");
            out.push_back(cluster);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Accuracy

inline double accuracy(const std::vector<IntentCategory>& predictions,
                       const std::vector<IntentCategory>& gold) {
    if (predictions.size() != gold.size())
        throw std::domain_error("prediction/gold length mismatch");
    if (predictions.empty()) throw std::domain_error("empty prediction set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i)
        if (predictions[i] == gold[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(gold.size());
}

// ---------------------------------------------------------------------------
// Annotator agreement

struct AnnotationItem {
    std::string triple_id;
    std::vector<std::string> labels;  // one per annotator
};

struct AnnotationSet {
    std::vector<AnnotationItem> items;
};

inline double fleiss_kappa(const AnnotationSet& annotations) {
    const auto& items = annotations.items;
    if (items.size() < 2)
        throw std::domain_error("fleiss kappa needs at least 2 items");
    const std::size_t raters = items.front().labels.size();
    if (raters < 2)
        throw std::domain_error("fleiss kappa needs at least 2 annotators");
    for (const auto& item : items)
        if (item.labels.size() != raters)
            throw std::domain_error("uneven annotator counts across items");

    std::set<std::string> label_set;
    for (const auto& item : items)
        for (const auto& l : item.labels) label_set.insert(l);
    std::vector<std::string> labels(label_set.begin(), label_set.end());

    const double n = static_cast<double>(raters);
    const double N = static_cast<double>(items.size());
    std::vector<double> marginal(labels.size(), 0.0);
    double p_bar = 0.0;
    for (const auto& item : items) {
        double sum_sq = 0.0;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            double count = 0.0;
            for (const auto& l : item.labels)
                if (l == labels[j]) count += 1.0;
            marginal[j] += count;
            sum_sq += count * count;
        }
        p_bar += (sum_sq - n) / (n * (n - 1.0));
    }
    p_bar /= N;

    double p_e = 0.0;
    for (double m : marginal) {
        const double p = m / (N * n);
        p_e += p * p;
    }
    if (p_e == 1.0) return 1.0;  // every rating identical, agreement is total
    return (p_bar - p_e) / (1.0 - p_e);
}

// Plurality label per item; a tie conservatively resolves to "incorrect".
inline std::vector<std::pair<std::string, std::string>> majority_vote(
    const AnnotationSet& annotations) {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(annotations.items.size());
    for (const auto& item : annotations.items) {
        std::map<std::string, std::size_t> votes;
        for (const auto& l : item.labels) ++votes[l];
        std::string best;
        std::size_t best_count = 0;
        bool tied = false;
        for (const auto& [label, count] : votes) {
            if (count > best_count) {
                best = label;
                best_count = count;
                tied = false;
            } else if (count == best_count) {
                tied = true;
            }
        }
        out.emplace_back(item.triple_id, tied ? "incorrect" : best);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stratified confidence-bucket sampling

struct StratifiedSample {
    struct Entry {
        int bucket = 0;
        std::size_t profile_index = 0;  // into the input profile vector
    };
    std::vector<Entry> entries;
    std::vector<std::string> shortfall_notes;
    std::size_t sampled_profiles = 0;
    std::size_t sampled_triples = 0;  // sum of 2 + |refiners| over the sample
};

// Bucket of a profile confidence: half-open [k/B, (k+1)/B), last bucket
// closed at 1.
inline int confidence_bucket(double alpha_i, int buckets) {
    const int b = static_cast<int>(std::floor(alpha_i * buckets));
    return std::min(b, buckets - 1);
}

inline StratifiedSample stratified_sample(
    const std::vector<IntentProfile>& profiles, int buckets,
    int types_per_bucket, int profiles_per_type, std::uint64_t seed) {
    if (buckets < 1) throw std::invalid_argument("buckets must be >= 1");
    if (types_per_bucket < 1 || profiles_per_type < 1)
        throw std::invalid_argument("sample sizes must be >= 1");

    std::mt19937_64 rng(seed);
    StratifiedSample sample;
    for (int b = 0; b < buckets; ++b) {
        // type label -> profile indices in this bucket, id-sorted
        std::map<std::string, std::vector<std::size_t>> by_type;
        for (std::size_t i = 0; i < profiles.size(); ++i)
            if (confidence_bucket(profiles[i].profile_confidence, buckets) == b)
                by_type[profiles[i].entity_type.label()].push_back(i);
        for (auto& [label, idxs] : by_type)
            std::sort(idxs.begin(), idxs.end(),
                      [&](std::size_t x, std::size_t y) {
                          return profiles[x].id.to_string() <
                                 profiles[y].id.to_string();
                      });

        std::vector<std::string> type_labels;
        for (const auto& [label, idxs] : by_type) type_labels.push_back(label);

        std::vector<std::string> chosen_types;
        if (type_labels.size() <= static_cast<std::size_t>(types_per_bucket)) {
            chosen_types = type_labels;
            if (type_labels.size() < static_cast<std::size_t>(types_per_bucket))
                sample.shortfall_notes.push_back(
                    "bucket " + std::to_string(b) + ": only " +
                    std::to_string(type_labels.size()) + " of " +
                    std::to_string(types_per_bucket) + " types available");
        } else {
            for (std::size_t pick : detail::sample_indices(
                     type_labels.size(), types_per_bucket, rng))
                chosen_types.push_back(type_labels[pick]);
            std::sort(chosen_types.begin(), chosen_types.end());
        }

        for (const auto& label : chosen_types) {
            const auto& candidates = by_type[label];
            std::vector<std::size_t> picked;
            if (candidates.size() <=
                static_cast<std::size_t>(profiles_per_type)) {
                picked = candidates;
                if (candidates.size() <
                    static_cast<std::size_t>(profiles_per_type))
                    sample.shortfall_notes.push_back(
                        "bucket " + std::to_string(b) + ", type " + label +
                        ": only " + std::to_string(candidates.size()) +
                        " of " + std::to_string(profiles_per_type) +
                        " profiles available");
            } else {
                for (std::size_t pick : detail::sample_indices(
                         candidates.size(), profiles_per_type, rng))
                    picked.push_back(candidates[pick]);
                std::sort(picked.begin(), picked.end());
            }
            for (std::size_t idx : picked) {
                sample.entries.push_back({b, idx});
                ++sample.sampled_profiles;
                sample.sampled_triples += 2 + profiles[idx].refiners.size();
            }
        }
    }
    return sample;
}

// ---------------------------------------------------------------------------
// Stratified fold assignment

// Fold index per instance, stratified by label. Instances of each label are
// shuffled and dealt round-robin; the deal counter runs across labels so the
// fold sizes stay balanced overall.
inline std::vector<int> make_folds(const std::vector<std::string>& labels,
                                   int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("fold count must be >= 2");
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i)
        groups[labels[i]].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<int> fold(labels.size(), 0);
    std::size_t counter = 0;
    for (auto& [label, idxs] : groups) {
        detail::shuffle(idxs, rng);
        for (std::size_t idx : idxs) {
            fold[idx] = static_cast<int>(counter % static_cast<std::size_t>(k));
            ++counter;
        }
    }
    return fold;
}

}  // namespace intentskb
