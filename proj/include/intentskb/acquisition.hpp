#pragma once

// Refiner acquisition: turns per-entity query suggestions into supported
// type-level refiners. Matching is exact lowercase prefix match with a single
// space separating the entity mention from the refiner.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intentskb/kb.hpp"

namespace intentskb {

struct EntityRecord {
    std::string entity_name;   // surface form used in queries, lowercase
    EntityType entity_type;
    long long popularity = 0;  // pageview count
};

struct SuggestionRecord {
    std::string entity_name;
    std::string suggestion;    // full suggested query, lowercase
};

struct TypedRefiner {
    EntityType entity_type;
    std::string refiner;
    long long support = 0;     // number of suggestion records producing it
};

// Lowercases and collapses whitespace runs to single spaces, trimming ends.
inline std::string normalize_query(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    return out;
}

// Types covered by at least min_entities entities with popularity strictly
// above pop_threshold, sorted by label.
inline std::vector<EntityType> select_types(
    const std::vector<EntityRecord>& entities, long long pop_threshold,
    long long min_entities) {
    if (pop_threshold < 0 || min_entities < 1)
        throw std::invalid_argument("bad type selection thresholds");
    std::map<EntityType, long long> qualifying;
    for (const auto& e : entities)
        if (e.popularity > pop_threshold) ++qualifying[e.entity_type];
    std::vector<EntityType> out;
    for (const auto& [type, count] : qualifying)
        if (count >= min_entities) out.push_back(type);
    return out;  // map iteration is already label-sorted
}

// The k most popular entities of a type; popularity ties break
// lexicographically by entity name. Returns fewer when the type is smaller.
inline std::vector<EntityRecord> top_entities(
    const std::vector<EntityRecord>& entities, const EntityType& type,
    std::size_t k) {
    if (k < 1) throw std::invalid_argument("top_entities requires k >= 1");
    std::vector<EntityRecord> of_type;
    for (const auto& e : entities)
        if (e.entity_type == type) of_type.push_back(e);
    std::sort(of_type.begin(), of_type.end(),
              [](const EntityRecord& a, const EntityRecord& b) {
                  if (a.popularity != b.popularity)
                      return a.popularity > b.popularity;
                  return a.entity_name < b.entity_name;
              });
    if (of_type.size() > k) of_type.resize(k);
    return of_type;
}

// Refiner of a suggestion following the "[entity] [refiner]" pattern, or
// nothing when the suggestion is not the entity mention plus a suffix.
// Inputs are expected lowercase and whitespace-normalized.
inline std::optional<std::string> extract_refiner(std::string_view entity_name,
                                                  std::string_view suggestion) {
    if (suggestion.size() <= entity_name.size() + 1) return std::nullopt;
    if (suggestion.substr(0, entity_name.size()) != entity_name)
        return std::nullopt;
    if (suggestion[entity_name.size()] != ' ') return std::nullopt;
    return std::string(suggestion.substr(entity_name.size() + 1));
}

struct AggregationResult {
    std::vector<TypedRefiner> refiners;      // (type label, refiner)-sorted
    std::size_t unknown_entity_records = 0;  // suggestions without an entity
    std::size_t unmatched_records = 0;       // suggestions not prefixed by it
};

// Counts, per (type, refiner), the suggestion records yielding that refiner
// over all entities of the type, and keeps pairs with support >= min_support.
// An entity carrying several types contributes to each of them.
inline AggregationResult aggregate_refiners(
    const std::vector<SuggestionRecord>& suggestions,
    const std::vector<EntityRecord>& entities, long long min_support) {
    if (min_support < 1)
        throw std::invalid_argument("min_support must be >= 1");

    std::map<std::string, std::vector<EntityType>> types_of;
    for (const auto& e : entities) {
        auto& ts = types_of[e.entity_name];
        if (std::find(ts.begin(), ts.end(), e.entity_type) == ts.end())
            ts.push_back(e.entity_type);
    }

    AggregationResult result;
    std::map<std::pair<EntityType, std::string>, long long> counts;
    for (const auto& s : suggestions) {
        const auto it = types_of.find(s.entity_name);
        if (it == types_of.end()) {
            ++result.unknown_entity_records;
            continue;
        }
        const auto refiner = extract_refiner(s.entity_name, s.suggestion);
        if (!refiner) {
            ++result.unmatched_records;
            continue;
        }
        for (const auto& type : it->second) ++counts[{type, *refiner}];
    }
    for (const auto& [key, count] : counts)
        if (count >= min_support)
            result.refiners.push_back({key.first, key.second, count});
    return result;
}

}  // namespace intentskb
