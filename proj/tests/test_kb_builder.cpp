#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "intentskb/kb_builder.hpp"
#include "support/generators.hpp"

using namespace intentskb;

namespace {

PhraseVector pv(std::vector<double> v) {
    return {std::move(v), PhraseVector::Source::TermCentroid, 1};
}

}  // namespace

TEST_CASE("expressed_by_confidence on singletons is exactly 1") {
    const auto v = pv({0.3, 0.4});
    CHECK(expressed_by_confidence(v, {v}) == 1.0);
}

TEST_CASE("expressed_by_confidence on identical vectors is 1") {
    const auto v = pv({0.3, 0.4});
    CHECK(expressed_by_confidence(v, {v, v}) ==
          Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("a zero centroid yields confidence 0 with a note") {
    const auto plus = pv({1.0, 0.0});
    const auto minus = pv({-1.0, 0.0});
    bool zero = false;
    CHECK(expressed_by_confidence(plus, {plus, minus}, &zero) == 0.0);
    CHECK(zero);
}

TEST_CASE("negative cosine clamps to zero for confidence use") {
    const auto a = pv({1.0, 0.1});
    const auto b = pv({-1.0, 0.3});
    const double conf = expressed_by_confidence(a, {a, b, b});
    CHECK(conf >= 0.0);
    CHECK(conf <= 1.0);
}

TEST_CASE("category_confidence averages member confidences") {
    ProfileDraft draft;
    draft.entity_type = make_entity_type("aviation", "airline");
    draft.category = IntentCategory::Service;
    draft.members = {{"a", pv({1.0, 0.0}), 0.8}, {"b", pv({0.9, 0.1}), 0.9}};
    CHECK(category_confidence(draft) == Catch::Approx(0.85).margin(1e-12));

    draft.members = {{"a", pv({1.0, 0.0}), 1.0}, {"b", pv({0.9, 0.1}), 1.0}};
    CHECK(category_confidence(draft) == 1.0);

    draft.members.clear();
    CHECK_THROWS_AS(category_confidence(draft), std::domain_error);
}

TEST_CASE("profile_confidence is the documented mixture") {
    CHECK(profile_confidence(1.0, {1.0, 1.0}) == 1.0);
    CHECK(profile_confidence(0.0, {0.0}) == 0.0);
    // 0.5 * (0.866 + mean(0.688, 0.656)) = 0.5 * (0.866 + 0.672) = 0.769
    CHECK(profile_confidence(0.866, {0.688, 0.656}) ==
          Catch::Approx(0.769).margin(1e-12));
    CHECK_THROWS_AS(profile_confidence(0.5, {}), std::domain_error);
    CHECK_THROWS_AS(profile_confidence(1.5, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(profile_confidence(0.5, {-0.1}), std::invalid_argument);
}

TEST_CASE("profile_confidence stays between its operands") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 500; ++trial) {
        const double alpha_c = detail::uniform_unit(rng);
        std::vector<double> confs(1 + detail::uniform_below(rng, 6));
        for (auto& c : confs) c = detail::uniform_unit(rng);
        double mean = 0.0;
        for (double c : confs) mean += c;
        mean /= static_cast<double>(confs.size());
        const double alpha_i = profile_confidence(alpha_c, confs);
        CHECK(alpha_i >= std::min(alpha_c, mean));
        CHECK(alpha_i <= std::max(alpha_c, mean));
    }
}

namespace {

ClusteredGroup clustered(const EntityType& type, IntentCategory category,
                         std::vector<std::pair<std::string, PhraseVector>>
                             members,
                         std::vector<std::vector<std::size_t>> clusters) {
    ClusteredGroup cg;
    cg.group.entity_type = type;
    cg.group.category = category;
    for (auto& [label, vector] : members)
        cg.group.members.push_back({label, vector});
    cg.clusters.clusters = std::move(clusters);
    return cg;
}

}  // namespace

TEST_CASE("build_profiles assigns per-type sequence numbers by confidence") {
    const EntityType airline = make_entity_type("aviation", "airline");
    std::map<std::pair<std::string, std::string>, double> alpha = {
        {{"aviation.airline", "booking"}, 0.9},
        {{"aviation.airline", "reservations"}, 0.9},
        {{"aviation.airline", "twitter"}, 0.4},
    };
    const auto cg = clustered(
        airline, IntentCategory::Service,
        {{"booking", pv({1.0, 0.0})},
         {"reservations", pv({0.95, 0.05})},
         {"twitter", pv({0.0, 1.0})}},
        {{0, 1}, {2}});
    const auto result = build_profiles({cg}, alpha);
    REQUIRE(result.profiles.size() == 2);

    // the singleton has expressedBy 1 and alpha_c 0.4 -> alpha_i = 0.7;
    // the pair has alpha_c 0.9 and near-1 expressedBy -> alpha_i ~ 0.95
    CHECK(result.profiles[0].id.seq == 0);
    CHECK(result.profiles[1].id.seq == 1);
    CHECK(result.profiles[0].refiners.size() == 2);
    CHECK(result.profiles[1].refiners.size() == 1);
    CHECK(result.profiles[0].profile_confidence >
          result.profiles[1].profile_confidence);
    CHECK(result.profiles[1].refiners[0].confidence == 1.0);
    CHECK(result.profiles[1].profile_confidence ==
          Catch::Approx(0.7).margin(1e-12));

    for (const auto& p : result.profiles) {
        validate_profile(p);
        CHECK(p.entity_type == airline);
    }
}

TEST_CASE("build_profiles names profiles after the nearest refiner") {
    const EntityType airline = make_entity_type("aviation", "airline");
    std::map<std::pair<std::string, std::string>, double> alpha = {
        {{"aviation.airline", "customer service"}, 0.9},
        {{"aviation.airline", "customer care"}, 0.84},
    };
    // cos to the centroid (0.8, 0.45): 0.9160 for the first member,
    // 0.9152 for the second, so the first labels the profile.
    const auto cg = clustered(airline, IntentCategory::Service,
                              {{"customer service", pv({1.0, 0.1})},
                               {"customer care", pv({0.6, 0.8})}},
                              {{0, 1}});
    const auto result = build_profiles({cg}, alpha);
    REQUIRE(result.profiles.size() == 1);
    const auto& p = result.profiles[0];
    CHECK(p.id.slug == "customer_service");
    CHECK(p.id.to_string() == "aviation.airline-0-customer_service");
    CHECK(p.category_confidence == Catch::Approx(0.87).margin(1e-12));
    CHECK(p.refiners[0].label == "customer service");
    CHECK(p.refiners[0].confidence >= p.refiners[1].confidence);
}

TEST_CASE("build_profiles demands a prediction for every refiner") {
    const EntityType airline = make_entity_type("aviation", "airline");
    const auto cg = clustered(airline, IntentCategory::Service,
                              {{"booking", pv({1.0, 0.0})}}, {{0}});
    try {
        build_profiles({cg}, {});
        FAIL("expected an error for the missing prediction");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("booking") != std::string::npos);
    }
}

TEST_CASE("build_profiles quad arithmetic over a multi-type fixture") {
    std::mt19937_64 rng(555);
    std::vector<ClusteredGroup> groups;
    std::map<std::pair<std::string, std::string>, double> alpha;
    const std::vector<EntityType> types = {
        make_entity_type("travel", "destination"),
        make_entity_type("aviation", "airline"),
        make_entity_type("food", "restaurant")};
    // 3 types, 7 clusters over 2+2+3 groups
    const std::vector<std::vector<std::size_t>> shapes = {
        {2, 1}, {3, 1}, {1, 2, 2}};
    for (std::size_t t = 0; t < types.size(); ++t) {
        RefinerGroup group;
        group.entity_type = types[t];
        group.category = IntentCategory::Service;
        ClusterSet set;
        std::size_t next = 0;
        for (std::size_t size : shapes[t]) {
            std::vector<std::size_t> cluster;
            for (std::size_t m = 0; m < size; ++m) {
                const std::string label =
                    "ref " + std::to_string(t) + " " + std::to_string(next);
                group.members.push_back(
                    {label, pv(testgen::random_unit_vector(4, rng))});
                alpha[{types[t].label(), label}] = detail::uniform_unit(rng);
                cluster.push_back(next++);
            }
            set.clusters.push_back(cluster);
        }
        groups.push_back({group, set});
    }

    const auto result = build_profiles(groups, alpha);
    CHECK(result.profiles.size() == 7);

    std::size_t expected_quads = 0;
    for (const auto& p : result.profiles)
        expected_quads += 2 + p.refiners.size();
    std::size_t actual = 0;
    for (const auto& p : result.profiles)
        actual += profile_to_quadruples(p).size();
    CHECK(actual == expected_quads);
    CHECK(actual == 2 * 7 + (2 + 1 + 3 + 1 + 1 + 2 + 2));

    // intent ids unique, confidences in range, builder is deterministic
    std::set<std::string> ids;
    for (const auto& p : result.profiles) {
        CHECK(ids.insert(p.id.to_string()).second);
        validate_profile(p);
    }
    const auto again = build_profiles(groups, alpha);
    REQUIRE(again.profiles.size() == result.profiles.size());
    for (std::size_t i = 0; i < result.profiles.size(); ++i)
        CHECK(again.profiles[i] == result.profiles[i]);
}

TEST_CASE("built profiles round-trip through the quad TSV") {
    std::mt19937_64 rng(808);
    std::vector<ClusteredGroup> groups;
    std::map<std::pair<std::string, std::string>, double> alpha;
    RefinerGroup group;
    group.entity_type = make_entity_type("music", "artist");
    group.category = IntentCategory::Website;
    ClusterSet set;
    for (std::size_t i = 0; i < 5; ++i) {
        const std::string label = "refiner " + std::to_string(i);
        group.members.push_back(
            {label, pv(testgen::random_unit_vector(3, rng))});
        alpha[{group.entity_type.label(), label}] = detail::uniform_unit(rng);
    }
    set.clusters = {{0, 1, 2}, {3}, {4}};
    groups.push_back({group, set});

    const auto result = build_profiles(groups, alpha);
    const std::string text = serialize_kb(result.profiles);
    const auto parsed = parse_kb(text);
    REQUIRE(parsed.size() == result.profiles.size());
    for (std::size_t i = 0; i < parsed.size(); ++i)
        CHECK(parsed[i] == result.profiles[i]);
}
