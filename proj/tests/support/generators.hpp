#pragma once

// Shared random-data generators for the unit and acceptance suites.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "intentskb/clustering.hpp"
#include "intentskb/features.hpp"
#include "intentskb/rng.hpp"

namespace testgen {

inline std::vector<double> random_unit_vector(std::size_t dim,
                                              std::mt19937_64& rng) {
    std::vector<double> v(dim);
    double n = 0.0;
    while (n == 0.0) {
        for (auto& c : v)
            c = intentskb::detail::uniform_unit(rng) * 2.0 - 1.0;
        n = intentskb::norm(v);
    }
    for (auto& c : v) c /= n;
    return v;
}

inline intentskb::RefinerGroup random_group(std::size_t size, std::size_t dim,
                                            std::mt19937_64& rng) {
    intentskb::RefinerGroup group;
    group.entity_type = intentskb::make_entity_type("travel", "destination");
    group.category = intentskb::IntentCategory::Service;
    for (std::size_t i = 0; i < size; ++i)
        group.members.push_back(
            {"refiner " + std::to_string(i),
             {random_unit_vector(dim, rng),
              intentskb::PhraseVector::Source::TermCentroid, 1}});
    return group;
}

// Four well-separated class blobs over num_features dimensions; class c sits
// at 5 * e_c with +-1 uniform noise.
inline std::vector<intentskb::LabeledInstance> synthetic_blobs(
    std::size_t count, std::size_t num_features, std::mt19937_64& rng) {
    std::vector<intentskb::LabeledInstance> instances;
    instances.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t cls =
            intentskb::detail::uniform_below(rng, intentskb::kNumCategories);
        intentskb::LabeledInstance inst;
        inst.entity_type = intentskb::make_entity_type("travel", "destination");
        inst.refiner = "instance " + std::to_string(i);
        inst.label = static_cast<intentskb::IntentCategory>(cls);
        inst.features.values.resize(num_features);
        for (std::size_t f = 0; f < num_features; ++f) {
            const double base = f == cls ? 5.0 : 0.0;
            inst.features.values[f] =
                base + intentskb::detail::uniform_unit(rng) * 2.0 - 1.0;
        }
        instances.push_back(std::move(inst));
    }
    return instances;
}

}  // namespace testgen
