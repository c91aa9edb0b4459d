#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "intentskb/acquisition.hpp"
#include "intentskb/rng.hpp"

using namespace intentskb;

namespace {

const EntityType kDestination = make_entity_type("travel", "destination");
const EntityType kAirline = make_entity_type("aviation", "airline");
const EntityType kRestaurant = make_entity_type("food", "restaurant");

}  // namespace

TEST_CASE("normalize_query lowercases and collapses whitespace") {
    CHECK(normalize_query("  Sydney   MAP ") == "sydney map");
    CHECK(normalize_query("klm") == "klm");
    CHECK(normalize_query("\tparis\nhotels ") == "paris hotels");
    CHECK(normalize_query("   ") == "");
}

TEST_CASE("select_types counts entities strictly above the threshold") {
    std::vector<EntityRecord> entities = {
        {"sydney", kDestination, 500},  {"paris", kDestination, 800},
        {"berlin", kDestination, 100},  {"klm", kAirline, 900},
        {"ryanair", kAirline, 50},      {"nobu", kRestaurant, 100},
    };
    // Qualifying (> 100): destination 2, airline 1, restaurant 0.
    const auto selected = select_types(entities, 100, 2);
    REQUIRE(selected.size() == 1);
    CHECK(selected[0] == kDestination);

    // Boundary: popularity equal to the threshold does not qualify, and a
    // type one entity short of min_entities is excluded.
    CHECK(select_types(entities, 100, 1).size() == 2);
    CHECK(select_types(entities, 99, 4).empty());
    CHECK_THROWS_AS(select_types(entities, -1, 1), std::invalid_argument);
    CHECK_THROWS_AS(select_types(entities, 0, 0), std::invalid_argument);
}

TEST_CASE("select_types output is label-sorted") {
    std::vector<EntityRecord> entities = {
        {"klm", kAirline, 900},
        {"sydney", kDestination, 900},
        {"nobu", kRestaurant, 900},
    };
    const auto selected = select_types(entities, 0, 1);
    REQUIRE(selected.size() == 3);
    CHECK(selected[0].label() == "aviation.airline");
    CHECK(selected[1].label() == "food.restaurant");
    CHECK(selected[2].label() == "travel.destination");
}

TEST_CASE("top_entities ranks by popularity with lexicographic ties") {
    std::vector<EntityRecord> entities = {
        {"paris", kDestination, 5},
        {"sydney", kDestination, 10},
        {"klm", kAirline, 100},
    };
    const auto top = top_entities(entities, kDestination, 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].entity_name == "sydney");

    std::vector<EntityRecord> tied = {
        {"berlin", kDestination, 7},
        {"athens", kDestination, 7},
    };
    const auto first = top_entities(tied, kDestination, 1);
    REQUIRE(first.size() == 1);
    CHECK(first[0].entity_name == "athens");

    CHECK(top_entities(tied, kDestination, 10).size() == 2);
    CHECK(top_entities(tied, kAirline, 3).empty());
    CHECK_THROWS_AS(top_entities(tied, kDestination, 0), std::invalid_argument);
}

TEST_CASE("extract_refiner matches the [entity] [refiner] pattern") {
    CHECK(extract_refiner("hilton", "hilton nyc") == "nyc");
    CHECK(extract_refiner("sydney", "sydney map") == "map");
    CHECK_FALSE(extract_refiner("hilton", "paris hilton").has_value());
    CHECK_FALSE(extract_refiner("hilton", "hilton").has_value());
    CHECK_FALSE(extract_refiner("hilton", "hiltonnyc").has_value());
    CHECK_FALSE(extract_refiner("hilton", "hilto nyc").has_value());
    CHECK(extract_refiner("new york", "new york subway map") == "subway map");
}

TEST_CASE("extract_refiner inverts suggestion construction") {
    std::mt19937_64 rng(71);
    const std::vector<std::string> entity_pool = {"sydney", "klm", "keens",
                                                  "new york", "ajax"};
    const std::vector<std::string> refiner_pool = {
        "map", "tickets", "customer service", "menu prices", "check in"};
    for (int i = 0; i < 200; ++i) {
        const auto& e =
            entity_pool[detail::uniform_below(rng, entity_pool.size())];
        const auto& r =
            refiner_pool[detail::uniform_below(rng, refiner_pool.size())];
        CHECK(extract_refiner(e, e + " " + r) == r);
    }
}

TEST_CASE("aggregate_refiners counts suggestion records per type") {
    std::vector<EntityRecord> entities = {
        {"sydney", kDestination, 10},
        {"paris", kDestination, 20},
    };
    std::vector<SuggestionRecord> suggestions = {
        {"sydney", "sydney map"},
        {"paris", "paris map"},
        {"paris", "paris hotels"},
    };
    const auto result = aggregate_refiners(suggestions, entities, 2);
    REQUIRE(result.refiners.size() == 1);
    CHECK(result.refiners[0].entity_type == kDestination);
    CHECK(result.refiners[0].refiner == "map");
    CHECK(result.refiners[0].support == 2);

    // Single occurrence stays below min_support.
    const auto strict = aggregate_refiners(
        {{"sydney", "sydney map"}}, entities, 2);
    CHECK(strict.refiners.empty());
}

TEST_CASE("aggregate_refiners skips unknown entities and tallies them") {
    std::vector<EntityRecord> entities = {{"sydney", kDestination, 10}};
    std::vector<SuggestionRecord> suggestions = {
        {"sydney", "sydney map"},
        {"zurich", "zurich map"},
        {"sydney", "hotels in sydney"},
    };
    const auto result = aggregate_refiners(suggestions, entities, 1);
    CHECK(result.unknown_entity_records == 1);
    CHECK(result.unmatched_records == 1);
    REQUIRE(result.refiners.size() == 1);
    CHECK(result.refiners[0].support == 1);
}

TEST_CASE("entities with several types feed each of them") {
    std::vector<EntityRecord> entities = {
        {"phoenix", kDestination, 10},
        {"phoenix", make_entity_type("music", "artist"), 10},
    };
    std::vector<SuggestionRecord> suggestions = {
        {"phoenix", "phoenix tour"},
        {"phoenix", "phoenix tour"},
    };
    const auto result = aggregate_refiners(suggestions, entities, 2);
    REQUIRE(result.refiners.size() == 2);
    CHECK(result.refiners[0].entity_type.label() == "music.artist");
    CHECK(result.refiners[0].refiner == "tour");
    CHECK(result.refiners[1].entity_type.label() == "travel.destination");
}

TEST_CASE("aggregation is independent of record order") {
    std::vector<EntityRecord> entities = {
        {"sydney", kDestination, 10},
        {"paris", kDestination, 20},
        {"klm", kAirline, 30},
    };
    std::vector<SuggestionRecord> suggestions = {
        {"sydney", "sydney map"},    {"paris", "paris map"},
        {"klm", "klm check in"},     {"paris", "paris hotels"},
        {"sydney", "sydney hotels"}, {"klm", "klm customer service"},
        {"klm", "klm check in online"},
    };
    const auto baseline = aggregate_refiners(suggestions, entities, 1);

    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        detail::shuffle(suggestions, rng);
        std::reverse(entities.begin(), entities.end());
        const auto shuffled = aggregate_refiners(suggestions, entities, 1);
        REQUIRE(shuffled.refiners.size() == baseline.refiners.size());
        for (std::size_t i = 0; i < baseline.refiners.size(); ++i) {
            CHECK(shuffled.refiners[i].entity_type ==
                  baseline.refiners[i].entity_type);
            CHECK(shuffled.refiners[i].refiner == baseline.refiners[i].refiner);
            CHECK(shuffled.refiners[i].support ==
                  baseline.refiners[i].support);
        }
    }
}

TEST_CASE("aggregation supports match a brute-force recount") {
    std::mt19937_64 rng(1234);
    const std::vector<std::string> names = {"sydney", "paris", "klm", "nobu",
                                            "ajax"};
    const std::vector<EntityType> types = {kDestination, kAirline, kRestaurant};
    const std::vector<std::string> refiners = {"map", "menu", "tickets",
                                               "check in"};
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<EntityRecord> entities;
        for (const auto& name : names)
            entities.push_back(
                {name, types[detail::uniform_below(rng, types.size())],
                 static_cast<long long>(detail::uniform_below(rng, 100))});
        std::vector<SuggestionRecord> suggestions;
        const std::size_t record_count = 5 + detail::uniform_below(rng, 40);
        for (std::size_t i = 0; i < record_count; ++i) {
            const auto& name = names[detail::uniform_below(rng, names.size())];
            const auto& refiner =
                refiners[detail::uniform_below(rng, refiners.size())];
            suggestions.push_back({name, name + " " + refiner});
        }
        const auto result = aggregate_refiners(suggestions, entities, 2);
        for (const auto& tr : result.refiners) {
            long long recount = 0;
            for (const auto& s : suggestions)
                for (const auto& e : entities)
                    if (e.entity_name == s.entity_name &&
                        e.entity_type == tr.entity_type &&
                        s.suggestion == s.entity_name + " " + tr.refiner)
                        ++recount;
            CHECK(tr.support == recount);
            CHECK(tr.support >= 2);
        }
    }
}
