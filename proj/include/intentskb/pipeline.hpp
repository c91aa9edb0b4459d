#pragma once

// Config-driven orchestration of the five stages
//   acquire -> categorize -> cluster -> build -> eval
// over files. All randomness is seeded from the config; rerunning a stage on
// unchanged inputs reproduces its output files byte for byte. External search
// pages come from a record/replay fixture store; nothing here touches the
// network.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "intentskb/acquisition.hpp"
#include "intentskb/clustering.hpp"
#include "intentskb/config.hpp"
#include "intentskb/embeddings.hpp"
#include "intentskb/features.hpp"
#include "intentskb/io.hpp"
#include "intentskb/kb.hpp"
#include "intentskb/kb_builder.hpp"
#include "intentskb/metrics.hpp"
#include "intentskb/random_forest.hpp"

namespace intentskb {

struct StageReport {
    std::string stage;
    std::map<std::string, long long> counts;
    std::map<std::string, double> metrics;
    std::map<std::string, long long> diagnostics;
    std::vector<std::string> notes;
    long long duration_ms = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["stage"] = stage;
        j["counts"] = counts;
        j["metrics"] = metrics;
        j["diagnostics"] = diagnostics;
        j["notes"] = notes;
        j["duration_ms"] = duration_ms;
        return j;
    }
};

// Replay store for recorded search pages, keyed by the normalized query. In
// record-missing mode unresolved keys are collected so they can be fetched
// offline and appended to the fixture file; replay mode just counts them.
class FixtureStore {
public:
    enum class Mode { Replay, RecordMissing };

    FixtureStore() = default;
    FixtureStore(std::map<std::string, SearchResultPage> pages, Mode mode)
        : pages_(std::move(pages)), mode_(mode) {}

    static FixtureStore from_file(const std::filesystem::path& path,
                                  Mode mode) {
        return FixtureStore(read_search_fixtures_jsonl(path), mode);
    }

    std::optional<SearchResultPage> lookup(const std::string& query) const {
        const auto it = pages_.find(query);
        if (it != pages_.end()) return it->second;
        ++misses_;
        if (mode_ == Mode::RecordMissing) missing_keys_.insert(query);
        return std::nullopt;
    }

    Mode mode() const { return mode_; }
    std::size_t size() const { return pages_.size(); }
    std::size_t misses() const { return misses_; }
    const std::set<std::string>& missing_keys() const { return missing_keys_; }

private:
    std::map<std::string, SearchResultPage> pages_;
    Mode mode_ = Mode::Replay;
    mutable std::size_t misses_ = 0;
    mutable std::set<std::string> missing_keys_;
};

namespace detail {

inline std::filesystem::path out_path(const PipelineConfig& config,
                                      const char* name) {
    return config.output_dir / name;
}

inline void require_input(const std::filesystem::path& path,
                          const char* what) {
    if (path.empty())
        throw InputError(std::string("config does not set the ") + what +
                         " path");
    if (!std::filesystem::exists(path))
        throw InputError(std::string(what) + " file not found: " +
                         path.string());
}

inline void require_upstream(const std::filesystem::path& path,
                             const char* producer) {
    if (!std::filesystem::exists(path))
        throw InputError("missing upstream artifact " + path.string() +
                         " (produced by the " + producer + " stage)");
}

class StageTimer {
public:
    explicit StageTimer(StageReport& report)
        : report_(report), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        report_.duration_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start_)
                .count();
    }

private:
    StageReport& report_;
    std::chrono::steady_clock::time_point start_;
};

inline void write_report(const PipelineConfig& config,
                         const StageReport& report) {
    auto out = open_output(out_path(config,
                                    (report.stage + "_report.json").c_str()));
    out << report.to_json().dump(2) << '\n';
}

// Feature computation shared by training, prediction and evaluation.
class FeatureContext {
public:
    FeatureContext(const PipelineConfig& config,
                   const EmbeddingVocabulary& vocab,
                   const FixtureStore* store,
                   std::map<std::string, std::string> top_entity_by_type)
        : config_(config),
          vocab_(vocab),
          store_(store),
          policy_(config.type_term_policy()),
          top_entity_by_type_(std::move(top_entity_by_type)) {
        known_sites_ = config.known_sites.empty() ? default_known_sites()
                                                  : config.known_sites;
    }

    FeatureVector features(const EntityType& type,
                           const std::string& refiner) const {
        switch (config_.feature_set) {
            case FeatureSet::Semantic:
                return semantic_features(type, refiner, vocab_, policy_);
            case FeatureSet::Lexical:
                return lexical_features(refiner, page_for(type, refiner),
                                        known_sites_);
            case FeatureSet::Combined:
                return concat_features(
                    lexical_features(refiner, page_for(type, refiner),
                                     known_sites_),
                    semantic_features(type, refiner, vocab_, policy_));
        }
        throw std::logic_error("unreachable feature set");
    }

    std::size_t fixture_misses() const { return fixture_misses_; }

private:
    SearchResultPage page_for(const EntityType& type,
                              const std::string& refiner) const {
        SearchResultPage empty;
        if (!store_) return empty;
        const auto it = top_entity_by_type_.find(type.label());
        if (it == top_entity_by_type_.end()) return empty;
        const std::string query = it->second + " " + refiner;
        empty.query = query;
        if (auto page = store_->lookup(query)) return *page;
        ++fixture_misses_;
        return empty;
    }

    const PipelineConfig& config_;
    const EmbeddingVocabulary& vocab_;
    const FixtureStore* store_;
    TypeTermPolicy policy_;
    std::map<std::string, std::string> top_entity_by_type_;
    std::vector<std::string> known_sites_;
    mutable std::size_t fixture_misses_ = 0;
};

inline std::map<std::string, std::string> top_entity_map(
    const std::vector<EntityRecord>& entities,
    const std::vector<EntityType>& types) {
    std::map<std::string, std::string> out;
    for (const auto& type : types) {
        const auto top = top_entities(entities, type, 1);
        if (!top.empty()) out[type.label()] = top.front().entity_name;
    }
    return out;
}

// Loads the store and per-type top entities only when lexical features are
// in play.
struct LexicalInputs {
    std::optional<FixtureStore> store;
    std::map<std::string, std::string> top_entity_by_type;
};

inline LexicalInputs lexical_inputs(const PipelineConfig& config) {
    LexicalInputs out;
    if (config.feature_set == FeatureSet::Semantic) return out;
    require_input(config.search_fixtures, "search_fixtures");
    out.store = FixtureStore::from_file(
        config.search_fixtures, config.record_missing
                                    ? FixtureStore::Mode::RecordMissing
                                    : FixtureStore::Mode::Replay);
    const auto entities = read_entities_jsonl(config.entities);
    const auto types = select_types(entities.records, config.pop_threshold,
                                    config.min_entities);
    out.top_entity_by_type = top_entity_map(entities.records, types);
    return out;
}

// In record-missing mode, unresolved queries are listed one per line so they
// can be fetched offline and appended to the fixture file.
inline void persist_missing_queries(const PipelineConfig& config,
                                    const LexicalInputs& lexical) {
    if (!lexical.store ||
        lexical.store->mode() != FixtureStore::Mode::RecordMissing ||
        lexical.store->missing_keys().empty())
        return;
    auto out = open_output(out_path(config, "missing_queries.txt"));
    for (const auto& query : lexical.store->missing_keys()) out << query << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// acquire

inline StageReport run_acquire(const PipelineConfig& config) {
    StageReport report;
    report.stage = "acquire";
    detail::StageTimer timer(report);
    detail::require_input(config.entities, "entities");
    detail::require_input(config.suggestions, "suggestions");
    std::filesystem::create_directories(config.output_dir);

    const EntitiesLoad entities = read_entities_jsonl(config.entities);
    const auto suggestions = read_suggestions_jsonl(config.suggestions);

    const auto selected = select_types(entities.records, config.pop_threshold,
                                       config.min_entities);

    std::vector<EntityRecord> scoped;
    std::set<std::string> scoped_names;
    for (const auto& type : selected)
        for (const auto& e : top_entities(entities.records, type,
                                          static_cast<std::size_t>(config.top_k))) {
            scoped.push_back(e);
            scoped_names.insert(e.entity_name);
        }

    std::set<std::string> known_names;
    for (const auto& e : entities.records) known_names.insert(e.entity_name);

    std::vector<SuggestionRecord> in_scope;
    long long out_of_scope = 0, unknown = 0;
    for (const auto& s : suggestions) {
        if (scoped_names.count(s.entity_name))
            in_scope.push_back(s);
        else if (known_names.count(s.entity_name))
            ++out_of_scope;
        else
            ++unknown;
    }

    const AggregationResult agg =
        aggregate_refiners(in_scope, scoped, config.min_support);
    write_refiners_tsv(agg.refiners, detail::out_path(config, "refiners.tsv"));

    report.counts["entity_records"] =
        static_cast<long long>(entities.records.size());
    report.counts["suggestion_records"] =
        static_cast<long long>(suggestions.size());
    report.counts["selected_types"] = static_cast<long long>(selected.size());
    report.counts["scoped_entities"] = static_cast<long long>(scoped.size());
    report.counts["refiners"] = static_cast<long long>(agg.refiners.size());
    report.diagnostics["duplicate_entity_pairs"] =
        static_cast<long long>(entities.duplicate_pairs);
    report.diagnostics["unknown_entity_records"] =
        unknown + static_cast<long long>(agg.unknown_entity_records);
    report.diagnostics["out_of_scope_records"] = out_of_scope;
    report.diagnostics["unmatched_records"] =
        static_cast<long long>(agg.unmatched_records);
    detail::write_report(config, report);
    return report;
}

// ---------------------------------------------------------------------------
// categorize

inline StageReport run_categorize(const PipelineConfig& config) {
    StageReport report;
    report.stage = "categorize";
    detail::StageTimer timer(report);
    detail::require_input(config.embeddings, "embeddings");
    detail::require_input(config.labeled, "labeled");
    detail::require_upstream(detail::out_path(config, "refiners.tsv"),
                             "acquire");
    std::filesystem::create_directories(config.output_dir);

    const EmbeddingLoad embeddings = load_embeddings(config.embeddings.string());
    const auto labeled = read_labeled_tsv(config.labeled);
    if (labeled.empty()) throw InputError("labeled data file is empty");

    const detail::LexicalInputs lexical = detail::lexical_inputs(config);
    const detail::FeatureContext context(
        config, embeddings.vocab,
        lexical.store ? &*lexical.store : nullptr, lexical.top_entity_by_type);

    std::vector<LabeledInstance> instances;
    instances.reserve(labeled.size());
    for (const auto& row : labeled) {
        LabeledInstance inst;
        inst.entity_type = row.entity_type;
        inst.refiner = row.refiner;
        inst.features = context.features(row.entity_type, row.refiner);
        inst.label = row.category;
        instances.push_back(std::move(inst));
    }

    const TrainedForest forest =
        train_forest(instances, config.trees, kAutoDepth, config.seed);
    // canonical instance order for the fold split, as in the eval stage
    std::vector<LabeledInstance> cv_instances = instances;
    std::sort(cv_instances.begin(), cv_instances.end(),
              [](const LabeledInstance& a, const LabeledInstance& b) {
                  const std::string la = a.entity_type.label();
                  const std::string lb = b.entity_type.label();
                  if (la != lb) return la < lb;
                  return a.refiner < b.refiner;
              });
    const double cv_acc = cross_validate(cv_instances, config.folds,
                                         config.seed, config.trees);

    const auto refiners =
        read_refiners_tsv(detail::out_path(config, "refiners.tsv"));
    std::vector<PredictionRow> predictions;
    long long held_out = 0;
    for (const auto& r : refiners) {
        if (!config.train_types.empty() &&
            config.train_types.count(r.entity_type.label())) {
            ++held_out;
            continue;
        }
        const auto features = context.features(r.entity_type, r.refiner);
        const CategoryPrediction pred = predict(forest, features);
        predictions.push_back(
            {r.entity_type, r.refiner, pred.category, pred.confidence});
    }
    write_predictions_tsv(predictions,
                          detail::out_path(config, "predictions.tsv"));
    detail::persist_missing_queries(config, lexical);

    report.counts["labeled_instances"] = static_cast<long long>(labeled.size());
    report.counts["predicted_refiners"] =
        static_cast<long long>(predictions.size());
    report.counts["feature_dimension"] = forest.num_features;
    report.metrics["cv_accuracy"] = cv_acc;
    report.diagnostics["duplicate_embedding_tokens"] =
        static_cast<long long>(embeddings.duplicate_tokens);
    report.diagnostics["train_type_refiners_held_out"] = held_out;
    report.diagnostics["fixture_misses"] =
        static_cast<long long>(context.fixture_misses());
    detail::write_report(config, report);
    return report;
}

// ---------------------------------------------------------------------------
// cluster

namespace detail {

struct GroupedRefiners {
    // (type label, category) -> group with members sorted by refiner label
    std::map<std::pair<std::string, int>, RefinerGroup> groups;
    long long oov_dropped = 0;
};

inline GroupedRefiners group_predictions(
    const std::vector<PredictionRow>& predictions,
    const EmbeddingVocabulary& vocab) {
    GroupedRefiners out;
    std::map<std::pair<std::string, int>, std::map<std::string, PhraseVector>>
        collected;
    for (const auto& row : predictions) {
        const auto vec = phrase_vector(vocab, row.refiner);
        if (!vec) {
            ++out.oov_dropped;
            continue;
        }
        collected[{row.entity_type.label(),
                   static_cast<int>(row.category)}][row.refiner] = *vec;
    }
    for (auto& [key, members] : collected) {
        RefinerGroup group;
        group.entity_type = parse_entity_type(key.first);
        group.category = static_cast<IntentCategory>(key.second);
        for (auto& [label, vec] : members)
            group.members.push_back({label, std::move(vec)});
        out.groups.emplace(key, std::move(group));
    }
    return out;
}

// Gold cluster rows -> per-category training examples for the grid search.
struct GoldTraining {
    std::map<IntentCategory, std::vector<ClusteringTrainExample>> by_category;
    long long oov_dropped = 0;
};

inline GoldTraining gold_training_examples(
    const std::vector<ClusterRow>& gold, const EmbeddingVocabulary& vocab,
    const std::set<std::string>& restrict_types) {
    GoldTraining out;
    std::map<std::pair<std::string, int>,
             std::vector<std::pair<std::string, std::string>>>
        members;  // (type, category) -> [(refiner, gold cluster id)]
    for (const auto& row : gold) {
        if (!restrict_types.empty() &&
            !restrict_types.count(row.entity_type.label()))
            continue;
        members[{row.entity_type.label(), static_cast<int>(row.category)}]
            .emplace_back(row.refiner, row.cluster);
    }
    for (const auto& [key, rows] : members) {
        ClusteringTrainExample example;
        example.group.entity_type = parse_entity_type(key.first);
        example.group.category = static_cast<IntentCategory>(key.second);
        std::map<std::string, int> cluster_ids;
        for (const auto& [refiner, cluster] : rows) {
            const auto vec = phrase_vector(vocab, refiner);
            if (!vec) {
                ++out.oov_dropped;
                continue;
            }
            example.group.members.push_back({refiner, *vec});
            const auto id = cluster_ids.emplace(
                cluster, static_cast<int>(cluster_ids.size()));
            example.gold.push_back(id.first->second);
        }
        if (example.group.members.size() >= 1)
            out.by_category[example.group.category].push_back(
                std::move(example));
    }
    return out;
}

}  // namespace detail

inline StageReport run_cluster(const PipelineConfig& config) {
    StageReport report;
    report.stage = "cluster";
    detail::StageTimer timer(report);
    detail::require_input(config.embeddings, "embeddings");
    detail::require_upstream(detail::out_path(config, "predictions.tsv"),
                             "categorize");
    std::filesystem::create_directories(config.output_dir);

    const EmbeddingLoad embeddings = load_embeddings(config.embeddings.string());
    const auto predictions =
        read_predictions_tsv(detail::out_path(config, "predictions.tsv"));
    detail::GroupedRefiners grouped =
        detail::group_predictions(predictions, embeddings.vocab);

    ClusteringParams params;
    params.grid_step = config.grid_step;
    long long defaulted = 0, gold_oov = 0;
    if (!config.gold_clusters.empty()) {
        detail::require_input(config.gold_clusters, "gold_clusters");
        const auto gold = read_clusters_tsv(config.gold_clusters);
        const detail::GoldTraining training = detail::gold_training_examples(
            gold, embeddings.vocab, config.train_types);
        gold_oov = training.oov_dropped;
        for (IntentCategory c : kAllCategories) {
            const auto it = training.by_category.find(c);
            if (it == training.by_category.end() || it->second.empty()) {
                params.epsilon[c] = config.epsilon_default;
                ++defaulted;
            } else {
                params.epsilon[c] =
                    fit_epsilon(it->second, c, config.grid_step);
            }
        }
    } else {
        for (IntentCategory c : kAllCategories)
            params.epsilon[c] = config.epsilon_default;
        defaulted = static_cast<long long>(kNumCategories);
    }
    write_epsilon_tsv(params.epsilon, detail::out_path(config, "epsilon.tsv"));

    std::vector<ClusterRow> rows;
    long long cluster_count = 0;
    for (const auto& [key, group] : grouped.groups) {
        const ClusterSet set = cluster_group(group, params);
        cluster_count += static_cast<long long>(set.clusters.size());
        for (std::size_t c = 0; c < set.clusters.size(); ++c)
            for (std::size_t idx : set.clusters[c])
                rows.push_back({group.entity_type, group.category,
                                std::to_string(c), group.members[idx].label});
    }
    write_clusters_tsv(rows, detail::out_path(config, "clusters.tsv"));

    report.counts["groups"] = static_cast<long long>(grouped.groups.size());
    report.counts["clusters"] = cluster_count;
    report.counts["clustered_refiners"] = static_cast<long long>(rows.size());
    report.diagnostics["oov_refiners_dropped"] = grouped.oov_dropped;
    report.diagnostics["gold_oov_refiners_dropped"] = gold_oov;
    report.diagnostics["categories_defaulted"] = defaulted;
    detail::write_report(config, report);
    return report;
}

// ---------------------------------------------------------------------------
// build

inline StageReport run_build(const PipelineConfig& config) {
    StageReport report;
    report.stage = "build";
    detail::StageTimer timer(report);
    detail::require_input(config.embeddings, "embeddings");
    detail::require_upstream(detail::out_path(config, "clusters.tsv"),
                             "cluster");
    detail::require_upstream(detail::out_path(config, "predictions.tsv"),
                             "categorize");
    std::filesystem::create_directories(config.output_dir);

    const EmbeddingLoad embeddings = load_embeddings(config.embeddings.string());
    const auto cluster_rows =
        read_clusters_tsv(detail::out_path(config, "clusters.tsv"));
    const auto predictions =
        read_predictions_tsv(detail::out_path(config, "predictions.tsv"));

    std::map<std::pair<std::string, std::string>, double> alpha;
    for (const auto& p : predictions)
        alpha[{p.entity_type.label(), p.refiner}] = p.confidence;

    // Rebuild the clustered groups in file order.
    std::map<std::pair<std::string, int>, ClusteredGroup> groups;
    std::map<std::pair<std::string, int>, std::map<std::string, std::size_t>>
        cluster_index;
    for (const auto& row : cluster_rows) {
        const auto key = std::make_pair(row.entity_type.label(),
                                        static_cast<int>(row.category));
        auto& cg = groups[key];
        cg.group.entity_type = row.entity_type;
        cg.group.category = row.category;
        const auto vec = phrase_vector(embeddings.vocab, row.refiner);
        if (!vec)
            throw InputError("refiner '" + row.refiner +
                             "' from clusters.tsv has no embedding; the "
                             "embeddings file does not match the cluster "
                             "stage inputs");
        const std::size_t member = cg.group.members.size();
        cg.group.members.push_back({row.refiner, *vec});
        auto& index = cluster_index[key];
        const auto it = index.emplace(row.cluster, cg.clusters.clusters.size());
        if (it.second) cg.clusters.clusters.emplace_back();
        cg.clusters.clusters[it.first->second].push_back(member);
    }
    std::vector<ClusteredGroup> ordered;
    ordered.reserve(groups.size());
    for (auto& [key, cg] : groups) ordered.push_back(std::move(cg));

    const BuildResult result = build_profiles(ordered, alpha);
    {
        auto out = detail::open_output(
            detail::out_path(config, "intents_kb.tsv"));
        serialize_kb(result.profiles, out);
    }
    write_profiles_jsonl(result.profiles,
                         detail::out_path(config, "profiles.jsonl"));

    long long quads = 0;
    for (const auto& p : result.profiles)
        quads += 2 + static_cast<long long>(p.refiners.size());
    report.counts["profiles"] = static_cast<long long>(result.profiles.size());
    report.counts["quadruples"] = quads;
    report.diagnostics["zero_centroid_members"] =
        static_cast<long long>(result.zero_centroid_members);
    detail::write_report(config, report);
    return report;
}

// ---------------------------------------------------------------------------
// eval

namespace detail {

struct ClusteringEval {
    double homogeneity = 0.0;
    double completeness = 0.0;
    double v_measure = 0.0;
    long long cells = 0;  // (fold, type) pairs aggregated
};

struct ClusteringEvalResult {
    ClusteringEval oracle;
    ClusteringEval automatic;
    long long instances = 0;
    long long oov_dropped = 0;
};

struct GoldInstance {
    EntityType type;
    std::string refiner;
    IntentCategory category;
    std::string gold_cluster;
    PhraseVector vector;
    FeatureVector features;
};

// Five-fold protocol over the gold clusters: each fold fits epsilon on the
// training refiners, clusters the held-out refiners per category (gold
// categories for the oracle setting, fold-trained classifier output for the
// automatic one), flattens per type and scores against the flattened gold.
inline ClusteringEvalResult evaluate_clustering(
    const std::vector<ClusterRow>& gold, const EmbeddingVocabulary& vocab,
    const FeatureContext& context, const PipelineConfig& config) {
    ClusteringEvalResult result;

    std::vector<GoldInstance> instances;
    for (const auto& row : gold) {
        const auto vec = phrase_vector(vocab, row.refiner);
        if (!vec) {
            ++result.oov_dropped;
            continue;
        }
        GoldInstance inst{row.entity_type, row.refiner, row.category,
                          row.cluster, *vec, {}};
        inst.features = context.features(row.entity_type, row.refiner);
        instances.push_back(std::move(inst));
    }
    // Canonical (type, refiner) order: fold assignment then matches the
    // categorization evaluation whenever the instance sets coincide, which
    // is what "the same partition of folds" requires.
    std::sort(instances.begin(), instances.end(),
              [](const GoldInstance& a, const GoldInstance& b) {
                  const std::string la = a.type.label();
                  const std::string lb = b.type.label();
                  if (la != lb) return la < lb;
                  return a.refiner < b.refiner;
              });
    result.instances = static_cast<long long>(instances.size());
    if (instances.size() < static_cast<std::size_t>(config.folds))
        throw InputError("gold_clusters holds fewer usable refiners than "
                         "folds");

    std::vector<std::string> labels;
    labels.reserve(instances.size());
    for (const auto& inst : instances)
        labels.push_back(to_string(inst.category));
    const std::vector<int> fold = make_folds(labels, config.folds, config.seed);

    auto accumulate = [](ClusteringEval& agg, const ClusteringScores& s) {
        agg.homogeneity += s.homogeneity;
        agg.completeness += s.completeness;
        agg.v_measure += s.v_measure;
        ++agg.cells;
    };

    for (int f = 0; f < config.folds; ++f) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < instances.size(); ++i)
            (fold[i] == f ? test_idx : train_idx).push_back(i);
        if (test_idx.empty() || train_idx.empty()) continue;

        // epsilon per category from the training members' gold partitions
        std::map<IntentCategory, std::vector<ClusteringTrainExample>>
            examples;
        {
            std::map<std::pair<std::string, int>, ClusteringTrainExample>
                per_group;
            std::map<std::pair<std::string, int>, std::map<std::string, int>>
                gold_ids;
            for (std::size_t i : train_idx) {
                const auto& inst = instances[i];
                const auto key = std::make_pair(
                    inst.type.label(), static_cast<int>(inst.category));
                auto& ex = per_group[key];
                ex.group.entity_type = inst.type;
                ex.group.category = inst.category;
                ex.group.members.push_back({inst.refiner, inst.vector});
                auto& ids = gold_ids[key];
                const auto id =
                    ids.emplace(inst.gold_cluster,
                                static_cast<int>(ids.size()));
                ex.gold.push_back(id.first->second);
            }
            for (auto& [key, ex] : per_group)
                examples[ex.group.category].push_back(std::move(ex));
        }
        ClusteringParams params;
        params.grid_step = config.grid_step;
        for (IntentCategory c : kAllCategories) {
            const auto it = examples.find(c);
            params.epsilon[c] = (it == examples.end() || it->second.empty())
                                    ? config.epsilon_default
                                    : fit_epsilon(it->second, c,
                                                  config.grid_step);
        }

        // classifier for the automatic setting, trained on this fold's
        // training split
        std::vector<LabeledInstance> train_set;
        for (std::size_t i : train_idx) {
            LabeledInstance inst;
            inst.entity_type = instances[i].type;
            inst.refiner = instances[i].refiner;
            inst.features = instances[i].features;
            inst.label = instances[i].category;
            train_set.push_back(std::move(inst));
        }
        const TrainedForest forest = train_forest(
            train_set, config.trees, kAutoDepth,
            config.seed + 1000003ULL * static_cast<std::uint64_t>(f + 1));

        for (int setting = 0; setting < 2; ++setting) {
            const bool oracle = setting == 0;
            // type label -> category -> members (index into instances)
            std::map<std::string,
                     std::map<IntentCategory, std::vector<std::size_t>>>
                by_type;
            for (std::size_t i : test_idx) {
                const IntentCategory category =
                    oracle ? instances[i].category
                           : predict(forest, instances[i].features).category;
                by_type[instances[i].type.label()][category].push_back(i);
            }
            for (const auto& [type_label, by_category] : by_type) {
                std::map<IntentCategory,
                         std::vector<std::vector<std::string>>>
                    partitions;
                for (const auto& [category, members] : by_category) {
                    RefinerGroup group;
                    group.entity_type = instances[members.front()].type;
                    group.category = category;
                    for (std::size_t i : members)
                        group.members.push_back(
                            {instances[i].refiner, instances[i].vector});
                    const ClusterSet set = cluster_group(group, params);
                    auto& out = partitions[category];
                    for (const auto& cluster : set.clusters) {
                        std::vector<std::string> labels_in_cluster;
                        for (std::size_t idx : cluster)
                            labels_in_cluster.push_back(
                                group.members[idx].label);
                        out.push_back(std::move(labels_in_cluster));
                    }
                }
                const auto flat = flatten(partitions);
                std::map<std::string, std::string> predicted_of;
                for (std::size_t c = 0; c < flat.size(); ++c)
                    for (const auto& label : flat[c])
                        predicted_of[label] = std::to_string(c);

                std::vector<std::string> gold_seq, pred_seq;
                for (const auto& [category, members] : by_category)
                    for (std::size_t i : members) {
                        gold_seq.push_back(instances[i].gold_cluster);
                        pred_seq.push_back(
                            predicted_of.at(instances[i].refiner));
                    }
                const auto scores = homogeneity_completeness_v(
                    ContingencyTable::from_labels(gold_seq, pred_seq));
                accumulate(oracle ? result.oracle : result.automatic, scores);
            }
        }
    }

    auto finalize = [](ClusteringEval& agg) {
        if (agg.cells == 0) return;
        agg.homogeneity /= static_cast<double>(agg.cells);
        agg.completeness /= static_cast<double>(agg.cells);
        agg.v_measure /= static_cast<double>(agg.cells);
    };
    finalize(result.oracle);
    finalize(result.automatic);
    return result;
}

inline std::string predicate_of_triple_id(const std::string& triple_id) {
    const auto first = triple_id.find('|');
    if (first == std::string::npos) return "all";
    const auto second = triple_id.find('|', first + 1);
    const std::string middle =
        second == std::string::npos
            ? triple_id.substr(first + 1)
            : triple_id.substr(first + 1, second - first - 1);
    try {
        return to_string(parse_predicate(middle));
    } catch (const std::invalid_argument&) {
        return "all";
    }
}

}  // namespace detail

inline StageReport run_eval(const PipelineConfig& config) {
    StageReport report;
    report.stage = "eval";
    detail::StageTimer timer(report);
    detail::require_input(config.embeddings, "embeddings");
    detail::require_input(config.labeled, "labeled");
    detail::require_upstream(detail::out_path(config, "profiles.jsonl"),
                             "build");
    std::filesystem::create_directories(config.output_dir);

    const EmbeddingLoad embeddings = load_embeddings(config.embeddings.string());
    const detail::LexicalInputs lexical = detail::lexical_inputs(config);
    const detail::FeatureContext context(
        config, embeddings.vocab,
        lexical.store ? &*lexical.store : nullptr, lexical.top_entity_by_type);

    nlohmann::json metrics;

    // classifier accuracy, five-fold by default; instances are put in
    // canonical (type, refiner) order so the fold partition is shared with
    // the clustering evaluation below
    const auto labeled = read_labeled_tsv(config.labeled);
    if (labeled.empty()) throw InputError("labeled data file is empty");
    std::vector<LabeledInstance> instances;
    for (const auto& row : labeled) {
        LabeledInstance inst;
        inst.entity_type = row.entity_type;
        inst.refiner = row.refiner;
        inst.features = context.features(row.entity_type, row.refiner);
        inst.label = row.category;
        instances.push_back(std::move(inst));
    }
    std::sort(instances.begin(), instances.end(),
              [](const LabeledInstance& a, const LabeledInstance& b) {
                  const std::string la = a.entity_type.label();
                  const std::string lb = b.entity_type.label();
                  if (la != lb) return la < lb;
                  return a.refiner < b.refiner;
              });
    const double acc = cross_validate(instances, config.folds, config.seed,
                                      config.trees);
    metrics["accuracy"] = acc;
    report.metrics["accuracy"] = acc;

    // clustering, oracle vs automatic categories
    metrics["homogeneity"] = nullptr;
    metrics["completeness"] = nullptr;
    metrics["v_measure"] = nullptr;
    if (!config.gold_clusters.empty()) {
        detail::require_input(config.gold_clusters, "gold_clusters");
        const auto gold = read_clusters_tsv(config.gold_clusters);
        const auto clustering = detail::evaluate_clustering(
            gold, embeddings.vocab, context, config);
        metrics["clustering"] = {
            {"oracle",
             {{"homogeneity", clustering.oracle.homogeneity},
              {"completeness", clustering.oracle.completeness},
              {"v_measure", clustering.oracle.v_measure}}},
            {"automatic",
             {{"homogeneity", clustering.automatic.homogeneity},
              {"completeness", clustering.automatic.completeness},
              {"v_measure", clustering.automatic.v_measure}}},
            {"gold_instances", clustering.instances},
            {"oov_dropped", clustering.oov_dropped}};
        // headline numbers come from the realistic automatic setting
        metrics["homogeneity"] = clustering.automatic.homogeneity;
        metrics["completeness"] = clustering.automatic.completeness;
        metrics["v_measure"] = clustering.automatic.v_measure;
        report.metrics["v_measure_automatic"] =
            clustering.automatic.v_measure;
        report.metrics["v_measure_oracle"] = clustering.oracle.v_measure;
    }

    // agreement statistics per predicate
    metrics["kappa_by_predicate"] = nlohmann::json::object();
    metrics["correct_rate_by_predicate"] = nlohmann::json::object();
    if (!config.annotations.empty()) {
        detail::require_input(config.annotations, "annotations");
        const AnnotationSet annotations =
            read_annotations_tsv(config.annotations);
        std::map<std::string, AnnotationSet> by_predicate;
        for (const auto& item : annotations.items)
            by_predicate[detail::predicate_of_triple_id(item.triple_id)]
                .items.push_back(item);
        for (const auto& [predicate, set] : by_predicate) {
            if (set.items.size() < 2) continue;
            metrics["kappa_by_predicate"][predicate] = fleiss_kappa(set);
            const auto votes = majority_vote(set);
            long long correct = 0;
            for (const auto& [id, label] : votes)
                if (label == "correct") ++correct;
            metrics["correct_rate_by_predicate"][predicate] =
                static_cast<double>(correct) /
                static_cast<double>(votes.size());
        }
        report.counts["annotation_items"] =
            static_cast<long long>(annotations.items.size());
    }

    // stratified confidence sample over the built profiles
    const auto profiles =
        read_profiles_jsonl(detail::out_path(config, "profiles.jsonl"));
    const StratifiedSample sample = stratified_sample(
        profiles, config.buckets, config.types_per_bucket,
        config.profiles_per_type, config.seed);
    {
        auto out = detail::open_output(detail::out_path(config, "sample.tsv"));
        for (const auto& entry : sample.entries) {
            const auto& p = profiles[entry.profile_index];
            const auto quads = profile_to_quadruples(p);
            for (std::size_t q = 0; q < quads.size(); ++q)
                out << p.id.to_string() << '|' << to_string(quads[q].predicate)
                    << '|' << q << '\t' << entry.bucket << '\t'
                    << p.id.to_string() << '\t' << to_string(quads[q].predicate)
                    << '\t' << quads[q].object << '\n';
        }
    }
    detail::persist_missing_queries(config, lexical);
    metrics["sample"] = {{"profiles", sample.sampled_profiles},
                         {"triples", sample.sampled_triples},
                         {"shortfalls", sample.shortfall_notes}};
    report.counts["sampled_profiles"] =
        static_cast<long long>(sample.sampled_profiles);
    report.counts["sampled_triples"] =
        static_cast<long long>(sample.sampled_triples);
    report.diagnostics["fixture_misses"] =
        static_cast<long long>(context.fixture_misses());

    {
        auto out = detail::open_output(detail::out_path(config, "metrics.json"));
        out << metrics.dump(2) << '\n';
    }
    detail::write_report(config, report);
    return report;
}

// ---------------------------------------------------------------------------
// dispatch

inline StageReport run_stage(const std::string& name,
                             const PipelineConfig& config) {
    if (name == "acquire") return run_acquire(config);
    if (name == "categorize") return run_categorize(config);
    if (name == "cluster") return run_cluster(config);
    if (name == "build") return run_build(config);
    if (name == "eval") return run_eval(config);
    throw InputError("unknown stage: " + name);
}

inline std::vector<StageReport> run_all(const PipelineConfig& config) {
    std::vector<StageReport> reports;
    for (const char* stage :
         {"acquire", "categorize", "cluster", "build", "eval"})
        reports.push_back(run_stage(stage, config));
    return reports;
}

}  // namespace intentskb
