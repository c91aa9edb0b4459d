#pragma once

// Feature extraction for (type, refiner) categorization.
//
// Group I (lexical), computed from the top search results of the most
// prominent entity-bearing query, in this fixed order:
//   0 domain_count        distinct result domains
//   1 jaro_url_mean       mean Jaro(refiner, url)
//   2 jaro_url_max        max Jaro(refiner, url)
//   3 title_match_frac    fraction of titles containing the refiner
//   4 snippet_match_frac  fraction of snippets containing the refiner
//   5 refiner_term_count
//   6 refiner_char_length
//   7 known_site_frac     fraction of domains on the known-site list
//   8 page_valid          1 when the page has results
// An empty page yields all-zero group I features.
//
// Group II (semantic):
//   0 type_refiner_cos    cos between refiner and type-term vectors
//   1 refiner_in_vocab    refiner vector coverage flag
//   2 type_in_vocab       type vector coverage flag

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intentskb/embeddings.hpp"
#include "intentskb/kb.hpp"

namespace intentskb {

struct SearchResult {
    int rank = 0;
    std::string url;
    std::string domain;  // derived from url when the source omits it
    std::string title;
    std::string snippet;
};

struct SearchResultPage {
    std::string query;
    std::vector<SearchResult> results;  // ranks strictly increasing, <= 10
};

struct FeatureVector {
    std::vector<double> values;

    bool operator==(const FeatureVector&) const = default;
};

struct LabeledInstance {
    EntityType entity_type;
    std::string refiner;
    FeatureVector features;
    IntentCategory label = IntentCategory::Other;
};

enum class FeatureSet { Lexical, Semantic, Combined };

inline std::string to_string(FeatureSet s) {
    switch (s) {
        case FeatureSet::Lexical: return "lexical";
        case FeatureSet::Semantic: return "semantic";
        case FeatureSet::Combined: return "combined";
    }
    throw std::invalid_argument("bad FeatureSet value");
}

inline FeatureSet parse_feature_set(std::string_view s) {
    if (s == "lexical") return FeatureSet::Lexical;
    if (s == "semantic") return FeatureSet::Semantic;
    if (s == "combined") return FeatureSet::Combined;
    throw std::invalid_argument("unknown feature set: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Jaro similarity

// Standard Jaro similarity in [0,1]: match window max(|a|,|b|)/2 - 1,
// transposition count halved. Both strings empty compares equal (1).
inline double jaro(std::string_view a, std::string_view b) {
    if (a == b) return 1.0;
    if (a.empty() || b.empty()) return 0.0;

    const std::size_t longest = std::max(a.size(), b.size());
    const std::size_t window = longest >= 2 ? longest / 2 - 1 : 0;

    std::vector<char> a_matched(a.size(), 0), b_matched(b.size(), 0);
    std::size_t matches = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t lo = i > window ? i - window : 0;
        const std::size_t hi = std::min(i + window + 1, b.size());
        for (std::size_t j = lo; j < hi; ++j) {
            if (!b_matched[j] && a[i] == b[j]) {
                a_matched[i] = b_matched[j] = 1;
                ++matches;
                break;
            }
        }
    }
    if (matches == 0) return 0.0;

    std::size_t half_transpositions = 0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a_matched[i]) continue;
        while (!b_matched[k]) ++k;
        if (a[i] != b[k]) ++half_transpositions;
        ++k;
    }
    const double m = static_cast<double>(matches);
    const double t = static_cast<double>(half_transpositions) / 2.0;
    return (m / static_cast<double>(a.size()) +
            m / static_cast<double>(b.size()) + (m - t) / m) /
           3.0;
}

// ---------------------------------------------------------------------------
// Lexical features

namespace detail {

inline std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& ch : out)
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
    return lowercase(haystack).find(lowercase(needle)) != std::string::npos;
}

}  // namespace detail

// Host part of a URL: scheme and path stripped, leading "www." and any port
// removed, lowercased.
inline std::string url_domain(std::string_view url) {
    std::string_view rest = url;
    if (const auto scheme = rest.find("://"); scheme != std::string_view::npos)
        rest = rest.substr(scheme + 3);
    const auto cut = rest.find_first_of("/?#");
    if (cut != std::string_view::npos) rest = rest.substr(0, cut);
    if (const auto port = rest.find(':'); port != std::string_view::npos)
        rest = rest.substr(0, port);
    std::string host = detail::lowercase(rest);
    if (host.rfind("www.", 0) == 0) host = host.substr(4);
    return host;
}

inline const std::vector<std::string>& default_known_sites() {
    static const std::vector<std::string> sites = {
        "twitter.com",   "x.com",          "facebook.com", "instagram.com",
        "youtube.com",   "wikipedia.org",  "linkedin.com", "tiktok.com",
        "reddit.com",    "pinterest.com"};
    return sites;
}

namespace detail {

inline bool on_site_list(const std::string& domain,
                         const std::vector<std::string>& sites) {
    for (const auto& site : sites) {
        if (domain == site) return true;
        if (domain.size() > site.size() &&
            domain.compare(domain.size() - site.size() - 1, site.size() + 1,
                           "." + site) == 0)
            return true;
    }
    return false;
}

}  // namespace detail

inline const std::vector<std::string>& lexical_feature_names() {
    static const std::vector<std::string> names = {
        "domain_count",      "jaro_url_mean",      "jaro_url_max",
        "title_match_frac",  "snippet_match_frac", "refiner_term_count",
        "refiner_char_length", "known_site_frac",  "page_valid"};
    return names;
}

inline FeatureVector lexical_features(
    const std::string& refiner, const SearchResultPage& page,
    const std::vector<std::string>& known_sites = default_known_sites()) {
    FeatureVector out;
    out.values.assign(lexical_feature_names().size(), 0.0);
    if (page.results.empty()) return out;  // page_valid stays 0

    const double n = static_cast<double>(page.results.size());
    std::vector<std::string> domains;
    double jaro_sum = 0.0, jaro_max = 0.0;
    double title_hits = 0.0, snippet_hits = 0.0, known_hits = 0.0;
    for (const auto& r : page.results) {
        const std::string domain =
            r.domain.empty() ? url_domain(r.url) : r.domain;
        domains.push_back(domain);
        const double j = jaro(refiner, r.url);
        jaro_sum += j;
        jaro_max = std::max(jaro_max, j);
        if (detail::contains_ci(r.title, refiner)) title_hits += 1.0;
        if (detail::contains_ci(r.snippet, refiner)) snippet_hits += 1.0;
        if (detail::on_site_list(domain, known_sites)) known_hits += 1.0;
    }
    std::sort(domains.begin(), domains.end());
    domains.erase(std::unique(domains.begin(), domains.end()), domains.end());

    out.values[0] = static_cast<double>(domains.size());
    out.values[1] = jaro_sum / n;
    out.values[2] = jaro_max;
    out.values[3] = title_hits / n;
    out.values[4] = snippet_hits / n;
    out.values[5] = static_cast<double>(detail::split_terms(refiner).size());
    out.values[6] = static_cast<double>(refiner.size());
    out.values[7] = known_hits / n;
    out.values[8] = 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Semantic features

// Which tokens make up the type-term phrase behind the type vector. The type
// name tokens are always used; the domain tokens are prepended only when the
// type name is a single token listed as generic (e.g. "destination", where
// the domain "travel" carries the meaning).
struct TypeTermPolicy {
    std::vector<std::string> generic_tokens;
};

inline std::vector<std::string> type_terms(const EntityType& type,
                                           const TypeTermPolicy& policy = {}) {
    std::vector<std::string> name_tokens =
        detail::split_terms(type.type_name, '_');
    if (name_tokens.size() == 1 &&
        std::find(policy.generic_tokens.begin(), policy.generic_tokens.end(),
                  name_tokens.front()) != policy.generic_tokens.end()) {
        std::vector<std::string> terms = detail::split_terms(type.domain, '_');
        terms.push_back(name_tokens.front());
        return terms;
    }
    return name_tokens;
}

inline const std::vector<std::string>& semantic_feature_names() {
    static const std::vector<std::string> names = {
        "type_refiner_cos", "refiner_in_vocab", "type_in_vocab"};
    return names;
}

inline FeatureVector semantic_features(const EntityType& type,
                                       const std::string& refiner,
                                       const EmbeddingVocabulary& vocab,
                                       const TypeTermPolicy& policy = {}) {
    FeatureVector out;
    out.values.assign(semantic_feature_names().size(), 0.0);

    const auto rvec = phrase_vector(vocab, refiner);
    std::string type_phrase;
    for (const auto& term : type_terms(type, policy)) {
        if (!type_phrase.empty()) type_phrase += ' ';
        type_phrase += term;
    }
    const auto tvec = phrase_vector(vocab, type_phrase);

    if (rvec && tvec) out.values[0] = cosine(rvec->vector, tvec->vector);
    out.values[1] = rvec ? 1.0 : 0.0;
    out.values[2] = tvec ? 1.0 : 0.0;
    return out;
}

inline FeatureVector concat_features(const FeatureVector& a,
                                     const FeatureVector& b) {
    FeatureVector out = a;
    out.values.insert(out.values.end(), b.values.begin(), b.values.end());
    return out;
}

}  // namespace intentskb
