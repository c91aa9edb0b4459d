#pragma once

// File formats used between pipeline stages.
//
//   entities         JSONL  {"entity": str, "types": [str], "popularity": int}
//   suggestions      JSONL  {"entity": str, "suggestion": str}
//   refiners         TSV    type \t refiner \t support
//   labeled data     TSV    type \t refiner \t category
//   predictions      TSV    type \t refiner \t category \t confidence
//   epsilon          TSV    category \t epsilon
//   clusters / gold  TSV    type \t category \t cluster \t refiner
//   search fixtures  JSONL  {"query": str, "results": [{rank,url,title,snippet}]}
//   annotations      TSV    triple_id \t label_1 \t ... \t label_m
//   profiles         JSONL  {"intentID","type","category","alpha_c","alpha_i","refiners"}

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "intentskb/acquisition.hpp"
#include "intentskb/errors.hpp"
#include "intentskb/features.hpp"
#include "intentskb/kb.hpp"
#include "intentskb/metrics.hpp"

namespace intentskb {

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open input file: " + path.string());
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // LF endings everywhere
    if (!out) throw InputError("cannot open output file: " + path.string());
    return out;
}

inline std::vector<std::string> split_tsv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

inline void require_fields(const std::vector<std::string>& fields,
                           std::size_t expected, const std::string& source,
                           std::size_t line) {
    if (fields.size() != expected)
        throw ParseError(source, line,
                         "expected " + std::to_string(expected) +
                             " tab-separated fields, got " +
                             std::to_string(fields.size()));
}

inline nlohmann::json parse_json_line(const std::string& line,
                                      const std::string& source,
                                      std::size_t lineno) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(source, lineno, e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Entities and suggestions

struct EntitiesLoad {
    std::vector<EntityRecord> records;       // one per (entity, type)
    std::size_t duplicate_pairs = 0;         // repeated (entity, type) rows
};

inline EntitiesLoad read_entities_jsonl(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    EntitiesLoad out;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto row = detail::parse_json_line(line, path.string(), lineno);
        try {
            const std::string name =
                normalize_query(row.at("entity").get<std::string>());
            const long long popularity = row.at("popularity").get<long long>();
            if (name.empty())
                throw std::invalid_argument("empty entity name");
            if (popularity < 0)
                throw std::invalid_argument("negative popularity");
            for (const auto& t : row.at("types")) {
                const EntityType type =
                    parse_entity_type(t.get<std::string>());
                const auto key = std::make_pair(name, type.label());
                if (const auto it = index.find(key); it != index.end()) {
                    ++out.duplicate_pairs;
                    out.records[it->second].popularity = popularity;
                } else {
                    index.emplace(key, out.records.size());
                    out.records.push_back({name, type, popularity});
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        } catch (const std::invalid_argument& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

inline std::vector<SuggestionRecord> read_suggestions_jsonl(
    const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::vector<SuggestionRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto row = detail::parse_json_line(line, path.string(), lineno);
        try {
            SuggestionRecord rec;
            rec.entity_name =
                normalize_query(row.at("entity").get<std::string>());
            rec.suggestion =
                normalize_query(row.at("suggestion").get<std::string>());
            if (rec.entity_name.empty() || rec.suggestion.empty())
                throw ParseError(path.string(), lineno,
                                 "empty entity or suggestion");
            out.push_back(std::move(rec));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Refiners

inline void write_refiners_tsv(const std::vector<TypedRefiner>& refiners,
                               const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    for (const auto& r : refiners)
        out << r.entity_type.label() << '\t' << r.refiner << '\t' << r.support
            << '\n';
}

inline std::vector<TypedRefiner> read_refiners_tsv(
    const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::vector<TypedRefiner> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_tsv(line);
        detail::require_fields(fields, 3, path.string(), lineno);
        try {
            const long long support = std::stoll(fields[2]);
            if (support < 1) throw std::invalid_argument("support < 1");
            out.push_back({parse_entity_type(fields[0]), fields[1], support});
        } catch (const std::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Labeled categorization data

struct LabeledRow {
    EntityType entity_type;
    std::string refiner;
    IntentCategory category = IntentCategory::Other;
};

inline std::vector<LabeledRow> read_labeled_tsv(
    const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::vector<LabeledRow> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_tsv(line);
        detail::require_fields(fields, 3, path.string(), lineno);
        try {
            out.push_back({parse_entity_type(fields[0]), fields[1],
                           parse_category(fields[2])});
        } catch (const std::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Category predictions

struct PredictionRow {
    EntityType entity_type;
    std::string refiner;
    IntentCategory category = IntentCategory::Other;
    double confidence = 0.0;
};

inline void write_predictions_tsv(const std::vector<PredictionRow>& rows,
                                  const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    for (const auto& r : rows)
        out << r.entity_type.label() << '\t' << r.refiner << '\t'
            << to_string(r.category) << '\t'
            << detail::format_confidence(r.confidence) << '\n';
}

inline std::vector<PredictionRow> read_predictions_tsv(
    const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::vector<PredictionRow> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_tsv(line);
        detail::require_fields(fields, 4, path.string(), lineno);
        try {
            const double conf = std::stod(fields[3]);
            if (conf < 0.0 || conf > 1.0)
                throw std::invalid_argument("confidence outside [0,1]");
            out.push_back({parse_entity_type(fields[0]), fields[1],
                           parse_category(fields[2]), conf});
        } catch (const std::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fitted clustering parameters

inline void write_epsilon_tsv(const std::map<IntentCategory, double>& epsilon,
                              const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    for (const auto& [category, eps] : epsilon)
        out << to_string(category) << '\t' << detail::format_confidence(eps)
            << '\n';
}

inline std::map<IntentCategory, double> read_epsilon_tsv(
    const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::map<IntentCategory, double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_tsv(line);
        detail::require_fields(fields, 2, path.string(), lineno);
        try {
            const double eps = std::stod(fields[1]);
            if (eps < 0.0 || eps > 1.0)
                throw std::invalid_argument("epsilon outside [0,1]");
            out[parse_category(fields[0])] = eps;
        } catch (const std::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cluster assignments (pipeline output and gold data share the schema)

struct ClusterRow {
    EntityType entity_type;
    IntentCategory category = IntentCategory::Other;
    std::string cluster;  // opaque id; output stages use 0,1,2,...
    std::string refiner;
};

inline void write_clusters_tsv(const std::vector<ClusterRow>& rows,
                               const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    for (const auto& r : rows)
        out << r.entity_type.label() << '\t' << to_string(r.category) << '\t'
            << r.cluster << '\t' << r.refiner << '\n';
}

inline std::vector<ClusterRow> read_clusters_tsv(
    const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::vector<ClusterRow> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_tsv(line);
        detail::require_fields(fields, 4, path.string(), lineno);
        try {
            out.push_back({parse_entity_type(fields[0]),
                           parse_category(fields[1]), fields[2], fields[3]});
        } catch (const std::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Recorded search pages

inline std::map<std::string, SearchResultPage> read_search_fixtures_jsonl(
    const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::map<std::string, SearchResultPage> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto row = detail::parse_json_line(line, path.string(), lineno);
        try {
            SearchResultPage page;
            page.query = normalize_query(row.at("query").get<std::string>());
            int last_rank = 0;
            for (const auto& r : row.at("results")) {
                SearchResult result;
                result.rank = r.at("rank").get<int>();
                result.url = r.at("url").get<std::string>();
                result.domain = url_domain(result.url);
                result.title = r.value("title", std::string());
                result.snippet = r.value("snippet", std::string());
                if (result.rank <= last_rank)
                    throw ParseError(path.string(), lineno,
                                     "result ranks must increase strictly");
                last_rank = result.rank;
                page.results.push_back(std::move(result));
            }
            if (page.results.size() > 10)
                throw ParseError(path.string(), lineno,
                                 "a page holds at most 10 results");
            out[page.query] = std::move(page);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Annotations

inline AnnotationSet read_annotations_tsv(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    AnnotationSet out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_tsv(line);
        if (fields.size() < 3)
            throw ParseError(path.string(), lineno,
                             "need a triple id and at least two labels");
        AnnotationItem item;
        item.triple_id = fields[0];
        item.labels.assign(fields.begin() + 1, fields.end());
        out.items.push_back(std::move(item));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Profiles JSONL

inline void write_profiles_jsonl(const std::vector<IntentProfile>& profiles,
                                 const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    for (const auto& p : profiles) {
        nlohmann::json row;
        row["intentID"] = p.id.to_string();
        row["type"] = p.entity_type.label();
        row["category"] = to_string(p.category);
        row["alpha_c"] = p.category_confidence;
        row["alpha_i"] = p.profile_confidence;
        nlohmann::json refiners = nlohmann::json::array();
        for (const auto& r : p.refiners)
            refiners.push_back({{"label", r.label}, {"conf", r.confidence}});
        row["refiners"] = std::move(refiners);
        out << row.dump() << '\n';
    }
}

inline std::vector<IntentProfile> read_profiles_jsonl(
    const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::vector<IntentProfile> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto row = detail::parse_json_line(line, path.string(), lineno);
        try {
            IntentProfile p;
            p.id = parse_intent_id(row.at("intentID").get<std::string>());
            p.entity_type = parse_entity_type(row.at("type").get<std::string>());
            p.category = parse_category(row.at("category").get<std::string>());
            p.category_confidence = row.at("alpha_c").get<double>();
            p.profile_confidence = row.at("alpha_i").get<double>();
            for (const auto& r : row.at("refiners"))
                p.refiners.push_back({r.at("label").get<std::string>(),
                                      r.at("conf").get<double>()});
            validate_profile(p);
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        } catch (const std::invalid_argument& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

}  // namespace intentskb
