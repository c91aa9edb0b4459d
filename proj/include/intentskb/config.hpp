#pragma once

// Pipeline configuration: a flat `key = value` text file. '#' starts a
// comment; relative paths resolve against the config file's directory.
// Threshold defaults follow the reference setup (popularity 3000, 100
// entities per type, top 1000 entities, support 5, 100 trees, 5 folds).

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "intentskb/errors.hpp"
#include "intentskb/features.hpp"

namespace intentskb {

struct PipelineConfig {
    // inputs
    std::filesystem::path entities;
    std::filesystem::path suggestions;
    std::filesystem::path embeddings;
    std::filesystem::path labeled;
    std::filesystem::path search_fixtures;  // optional
    std::filesystem::path gold_clusters;    // optional
    std::filesystem::path annotations;      // optional
    std::filesystem::path output_dir = "out";

    // acquisition thresholds
    long long pop_threshold = 3000;
    long long min_entities = 100;
    long long top_k = 1000;
    long long min_support = 5;

    // classifier
    int trees = 100;
    int folds = 5;
    FeatureSet feature_set = FeatureSet::Semantic;
    std::vector<std::string> known_sites;         // empty: built-in list
    std::vector<std::string> generic_type_tokens;

    // clustering
    double grid_step = 0.01;
    double epsilon_default = 0.5;  // used when no gold clusters are given

    // train/apply split: type labels held out for training
    std::set<std::string> train_types;

    // sampling
    int buckets = 5;
    int types_per_bucket = 25;
    int profiles_per_type = 5;

    // record/replay store behavior
    bool record_missing = false;  // replay is the default and test mode

    std::uint64_t seed = 42;

    TypeTermPolicy type_term_policy() const {
        return TypeTermPolicy{generic_type_tokens};
    }
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            const std::string item = strip(cur);
            if (!item.empty()) out.push_back(item);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    const std::string item = strip(cur);
    if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace detail

inline void validate_config(const PipelineConfig& config) {
    auto positive = [](long long v, const char* name) {
        if (v < 1)
            throw InputError(std::string("config: ") + name +
                             " must be positive");
    };
    positive(config.pop_threshold, "pop_threshold");
    positive(config.min_entities, "min_entities");
    positive(config.top_k, "top_k");
    positive(config.min_support, "min_support");
    positive(config.trees, "trees");
    positive(config.buckets, "buckets");
    positive(config.types_per_bucket, "types_per_bucket");
    positive(config.profiles_per_type, "profiles_per_type");
    if (config.folds < 2) throw InputError("config: folds must be >= 2");
    if (config.grid_step <= 0.0 || config.grid_step > 1.0)
        throw InputError("config: grid_step must be in (0,1]");
    if (config.epsilon_default < 0.0 || config.epsilon_default > 1.0)
        throw InputError("config: epsilon_default must be in [0,1]");
    if (config.entities.empty() || config.suggestions.empty() ||
        config.embeddings.empty() || config.labeled.empty())
        throw InputError(
            "config: entities, suggestions, embeddings and labeled paths are "
            "required");
}

inline PipelineConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path.string());
    const std::filesystem::path base = path.parent_path();

    auto resolve = [&](const std::string& value) -> std::filesystem::path {
        std::filesystem::path p(value);
        return p.is_absolute() ? p : base / p;
    };

    PipelineConfig config;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path.string(), lineno,
                             "expected 'key = value': " + line);
        const std::string key = detail::strip(line.substr(0, eq));
        const std::string value = detail::strip(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError(path.string(), lineno, "empty key or value");

        try {
            if (key == "entities") config.entities = resolve(value);
            else if (key == "suggestions") config.suggestions = resolve(value);
            else if (key == "embeddings") config.embeddings = resolve(value);
            else if (key == "labeled") config.labeled = resolve(value);
            else if (key == "search_fixtures")
                config.search_fixtures = resolve(value);
            else if (key == "gold_clusters")
                config.gold_clusters = resolve(value);
            else if (key == "annotations") config.annotations = resolve(value);
            else if (key == "output_dir") config.output_dir = resolve(value);
            else if (key == "pop_threshold")
                config.pop_threshold = std::stoll(value);
            else if (key == "min_entities")
                config.min_entities = std::stoll(value);
            else if (key == "top_k") config.top_k = std::stoll(value);
            else if (key == "min_support")
                config.min_support = std::stoll(value);
            else if (key == "trees") config.trees = std::stoi(value);
            else if (key == "folds") config.folds = std::stoi(value);
            else if (key == "feature_set")
                config.feature_set = parse_feature_set(value);
            else if (key == "known_sites")
                config.known_sites = detail::split_csv(value);
            else if (key == "generic_type_tokens")
                config.generic_type_tokens = detail::split_csv(value);
            else if (key == "grid_step") config.grid_step = std::stod(value);
            else if (key == "epsilon_default")
                config.epsilon_default = std::stod(value);
            else if (key == "train_types") {
                for (const auto& label : detail::split_csv(value))
                    config.train_types.insert(label);
            } else if (key == "buckets") config.buckets = std::stoi(value);
            else if (key == "types_per_bucket")
                config.types_per_bucket = std::stoi(value);
            else if (key == "profiles_per_type")
                config.profiles_per_type = std::stoi(value);
            else if (key == "fixture_mode") {
                if (value == "replay") config.record_missing = false;
                else if (value == "record-missing") config.record_missing = true;
                else throw std::invalid_argument("unknown fixture_mode");
            } else if (key == "seed")
                config.seed = std::stoull(value);
            else
                throw ParseError(path.string(), lineno,
                                 "unknown config key: " + key);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(path.string(), lineno,
                             "bad value for " + key + ": " + e.what());
        }
    }
    validate_config(config);
    return config;
}

}  // namespace intentskb
