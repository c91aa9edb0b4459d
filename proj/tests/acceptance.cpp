// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Run from anywhere; fixture paths are compiled in.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>
#include <unistd.h>

#include "intentskb/clustering.hpp"
#include "intentskb/features.hpp"
#include "intentskb/kb.hpp"
#include "intentskb/kb_builder.hpp"
#include "intentskb/metrics.hpp"
#include "intentskb/pipeline.hpp"
#include "intentskb/random_forest.hpp"
#include "support/generators.hpp"
#include "support/hac_oracle.hpp"

namespace fs = std::filesystem;
using namespace intentskb;

namespace {

const fs::path kFixtures = INTENTSKB_FIXTURE_DIR;

struct Harness {
    int failures = 0;

    void run(const std::string& name, const std::function<void()>& body) {
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            body();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        if (error.empty()) {
            std::cout << "[PASS] " << name << " (" << ms << " ms)\n";
        } else {
            ++failures;
            std::cout << "[FAIL] " << name << " (" << ms << " ms): " << error
                      << "\n";
        }
    }
};

void require(bool condition, const std::string& message) {
    if (!condition) throw std::runtime_error(message);
}

void require_near(double actual, double expected, double tolerance,
                  const std::string& what) {
    if (std::fabs(actual - expected) > tolerance)
        throw std::runtime_error(what + ": got " + std::to_string(actual) +
                                 ", expected " + std::to_string(expected) +
                                 " within " + std::to_string(tolerance));
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path temp_dir(const std::string& tag) {
    const fs::path dir =
        fs::temp_directory_path() /
        ("intentskb_accept_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// --- criteria ---------------------------------------------------------------

void hac_oracle_equivalence() {
    std::mt19937_64 rng(20180601);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + detail::uniform_below(rng, 7);  // <= 8
        const RefinerGroup group = testgen::random_group(n, 4, rng);
        const double cutoff = detail::uniform_unit(rng) * 2.0;
        const ClusterSet ours = hac(group, cutoff);
        const auto reference = oracle::agglomerate(group, cutoff);
        require(ours.clusters.size() == reference.size(),
                "cluster count differs from the oracle at trial " +
                    std::to_string(trial));
        for (std::size_t c = 0; c < reference.size(); ++c)
            require(ours.clusters[c] == reference[c],
                    "partition differs from the oracle at trial " +
                        std::to_string(trial));
    }
}

void clustering_limits() {
    std::mt19937_64 rng(20180602);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + detail::uniform_below(rng, 7);
        const RefinerGroup group = testgen::random_group(n, 4, rng);
        // random unit vectors are pairwise distinct; assert it to keep the
        // epsilon = 0 limit meaningful
        double min_d = 2.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                min_d = std::min(min_d, distance(group.members[i].vector,
                                                 group.members[j].vector));
        require(min_d > 0.0, "degenerate random group");

        ClusteringParams params;
        params.epsilon[IntentCategory::Service] = 0.0;
        require(cluster_group(group, params).clusters.size() == n,
                "epsilon 0 must keep all singletons");
        params.epsilon[IntentCategory::Service] = 1.0;
        require(cluster_group(group, params).clusters.size() == 1,
                "epsilon 1 must merge everything");
    }
}

void metric_correctness() {
    const auto perfect = homogeneity_completeness_v(
        ContingencyTable::from_labels<std::string>({"a", "a", "b", "b"},
                                                   {"1", "1", "2", "2"}));
    require(perfect.homogeneity == 1.0 && perfect.completeness == 1.0 &&
                perfect.v_measure == 1.0,
            "perfect clustering must score exactly (1,1,1)");

    const auto lumped = homogeneity_completeness_v(
        ContingencyTable::from_labels<std::string>({"a", "a", "b", "b"},
                                                   {"1", "1", "1", "1"}));
    require(lumped.homogeneity == 0.0 && lumped.completeness == 1.0 &&
                lumped.v_measure == 0.0,
            "all-in-one clustering must score exactly (0,1,0)");

    const auto split = homogeneity_completeness_v(
        ContingencyTable::from_labels<std::string>({"a", "a", "b", "b"},
                                                   {"1", "1", "1", "2"}));
    require_near(split.homogeneity, 0.311, 1e-3, "homogeneity");
    require_near(split.completeness, 0.384, 1e-3, "completeness");
    require_near(split.v_measure, 0.344, 1e-3, "v-measure");
}

void fleiss_kappa_criterion() {
    AnnotationSet perfect;
    perfect.items = {{"t1", {"a", "a", "a"}},
                     {"t2", {"b", "b", "b"}},
                     {"t3", {"a", "a", "a"}}};
    require(fleiss_kappa(perfect) == 1.0,
            "perfect agreement must give kappa exactly 1");

    AnnotationSet mixed;
    mixed.items = {{"t1", {"a", "a", "a"}},
                   {"t2", {"b", "b", "b"}},
                   {"t3", {"a", "a", "b"}},
                   {"t4", {"a", "b", "b"}}};
    require_near(fleiss_kappa(mixed), 0.3333, 1e-4, "fleiss kappa 3x4x2");
}

void jaro_criterion() {
    require_near(jaro("martha", "marhta"), 0.9444, 1e-4, "jaro martha/marhta");

    std::mt19937_64 rng(20180603);
    auto random_string = [&]() {
        std::string s;
        const std::size_t len = detail::uniform_below(rng, 14);
        for (std::size_t i = 0; i < len; ++i)
            s += static_cast<char>('a' + detail::uniform_below(rng, 5));
        return s;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        const std::string a = random_string();
        const std::string b = random_string();
        const double ab = jaro(a, b);
        require(ab == jaro(b, a), "jaro must be symmetric");
        require(jaro(a, a) == 1.0, "jaro identity must be exactly 1");
        require(ab >= 0.0 && ab <= 1.0, "jaro must stay in [0,1]");
        if (a != b && !a.empty() && !b.empty())
            require(ab < 1.0, "jaro of different strings must be below 1");
    }
}

void classifier_sanity() {
    std::mt19937_64 rng(20180604);
    const auto instances = testgen::synthetic_blobs(500, 6, rng);
    const double accuracy = cross_validate(instances, 5, 7, 100);
    require(accuracy >= 0.90, "5-fold accuracy " + std::to_string(accuracy) +
                                  " below 0.90");
    const double again = cross_validate(instances, 5, 7, 100);
    require(accuracy == again, "cross-validation must be deterministic");
}

void confidence_algebra() {
    std::mt19937_64 rng(20180605);
    for (int trial = 0; trial < 1000; ++trial) {
        const double alpha_c = detail::uniform_unit(rng);
        std::vector<double> expressed(1 + detail::uniform_below(rng, 5));
        for (auto& c : expressed) c = detail::uniform_unit(rng);
        double mean = 0.0;
        for (double c : expressed) mean += c;
        mean /= static_cast<double>(expressed.size());

        const double alpha_i = profile_confidence(alpha_c, expressed);
        require(alpha_i >= std::min(alpha_c, mean) &&
                    alpha_i <= std::max(alpha_c, mean),
                "profile confidence must stay between its operands");

        // singleton expressedBy confidence is exactly 1
        const PhraseVector v{testgen::random_unit_vector(4, rng),
                             PhraseVector::Source::TermCentroid, 1};
        require(expressed_by_confidence(v, {v}) == 1.0,
                "singleton expressedBy confidence must be exactly 1");

        IntentProfile p;
        p.entity_type = make_entity_type("travel", "destination");
        p.id = make_intent_id(p.entity_type, trial, "probe");
        p.category = IntentCategory::Service;
        p.category_confidence = detail::quantize_confidence(alpha_c);
        p.refiners = {{"probe", detail::quantize_confidence(expressed[0])}};
        p.profile_confidence = detail::mixture_confidence(
            p.category_confidence, {p.refiners[0].confidence});
        const auto quads = profile_to_quadruples(p);
        require(quads.front().predicate == Predicate::SearchedForType &&
                    quads.front().confidence == 1.0,
                "searchedForType confidence must be exactly 1");
    }
}

void golden_run() {
    PipelineConfig config = parse_config(kFixtures / "pipeline.conf");
    const fs::path out_a = temp_dir("golden_a");
    const fs::path out_b = temp_dir("golden_b");
    config.output_dir = out_a;
    run_all(config);
    config.output_dir = out_b;
    run_all(config);

    const std::string kb_a = slurp(out_a / "intents_kb.tsv");
    const std::string kb_b = slurp(out_b / "intents_kb.tsv");
    require(kb_a == kb_b, "two runs must produce byte-identical quad TSVs");
    require(kb_a == slurp(kFixtures / "golden" / "intents_kb.tsv"),
            "run output must match the committed golden quad TSV");
    fs::remove_all(out_a);
    fs::remove_all(out_b);
}

void kb_structural_audit() {
    const auto kb =
        parse_kb(slurp(kFixtures / "golden" / "intents_kb.tsv"), "golden");
    require(!kb.empty(), "golden KB must not be empty");

    std::set<std::string> ids;
    std::size_t quad_count = 0;
    std::size_t expected = 0;
    for (const auto& profile : kb) {
        validate_profile(profile);
        require(ids.insert(profile.id.to_string()).second,
                "intent ids must be unique");
        const auto quads = profile_to_quadruples(profile);
        quad_count += quads.size();
        expected += 2 + profile.refiners.size();
        require(quads.size() == 2 + profile.refiners.size(),
                "every profile must expand to exactly 1+1+k quadruples");
        require(quads[0].predicate == Predicate::SearchedForType &&
                    quads[0].confidence == 1.0,
                "profiles must start with a searchedForType quad at 1");
        require(quads[1].predicate == Predicate::OfCategory,
                "profiles must carry exactly one ofCategory quad");
        for (const auto& q : quads)
            require(q.confidence >= 0.0 && q.confidence <= 1.0,
                    "confidences must stay within [0,1]");
    }
    require(quad_count == expected, "quad count must equal sum of 2+|R(i)|");
}

}  // namespace

int main() {
    Harness harness;
    harness.run("hac-oracle-equivalence", hac_oracle_equivalence);
    harness.run("clustering-limits", clustering_limits);
    harness.run("metric-correctness", metric_correctness);
    harness.run("fleiss-kappa", fleiss_kappa_criterion);
    harness.run("jaro", jaro_criterion);
    harness.run("classifier-sanity", classifier_sanity);
    harness.run("confidence-algebra", confidence_algebra);
    harness.run("end-to-end-golden-run", golden_run);
    harness.run("kb-structural-audit", kb_structural_audit);

    if (harness.failures == 0)
        std::cout << "all acceptance criteria passed\n";
    else
        std::cout << harness.failures << " acceptance criteria failed\n";
    return harness.failures;
}
