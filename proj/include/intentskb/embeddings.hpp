#pragma once

// Pre-trained word vector store with phrase composition and cosine similarity.
//
// File format: header line `<vocab_size> <dimension>`, then one entry per
// line, `token v1 v2 ... vd`, space-separated ASCII floats.

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "intentskb/errors.hpp"

namespace intentskb {

struct EmbeddingVocabulary {
    int dimension = 0;
    std::map<std::string, std::vector<double>> entries;

    bool contains(const std::string& token) const {
        return entries.find(token) != entries.end();
    }
    std::size_t size() const { return entries.size(); }
};

struct EmbeddingLoad {
    EmbeddingVocabulary vocab;
    std::size_t duplicate_tokens = 0;  // earlier occurrences overwritten
};

inline EmbeddingLoad load_embeddings(std::istream& in,
                                     const std::string& source = "") {
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(source, 1, "missing embedding header line");
    std::istringstream header(line);
    long long declared_size = -1;
    int dimension = 0;
    if (!(header >> declared_size >> dimension) || declared_size < 0 ||
        dimension < 1)
        throw ParseError(source, 1, "bad embedding header: " + line);

    EmbeddingLoad result;
    result.vocab.dimension = dimension;
    std::size_t lineno = 1;
    long long rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string token;
        row >> token;
        std::vector<double> vec;
        vec.reserve(dimension);
        double v;
        while (row >> v) vec.push_back(v);
        if (!row.eof())
            throw ParseError(source, lineno, "non-numeric vector component");
        if (static_cast<int>(vec.size()) != dimension)
            throw ParseError(source, lineno,
                             "expected " + std::to_string(dimension) +
                                 " components, got " +
                                 std::to_string(vec.size()));
        for (double c : vec)
            if (!std::isfinite(c))
                throw ParseError(source, lineno,
                                 "non-finite vector component in '" + token +
                                     "'");
        if (result.vocab.entries.count(token)) ++result.duplicate_tokens;
        result.vocab.entries[token] = std::move(vec);
        ++rows;
    }
    if (rows != declared_size)
        throw ParseError(source, lineno,
                         "header declares " + std::to_string(declared_size) +
                             " entries but file has " + std::to_string(rows));
    return result;
}

inline EmbeddingLoad load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open embedding file: " + path);
    return load_embeddings(in, path);
}

// ---------------------------------------------------------------------------
// Vector ops

inline double dot(const std::vector<double>& u, const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
    return acc;
}

inline double norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

inline double cosine(const std::vector<double>& u,
                     const std::vector<double>& v) {
    if (u.size() != v.size())
        throw std::domain_error("cosine of vectors with different dimensions");
    const double nu = norm(u);
    const double nv = norm(v);
    if (nu == 0.0 || nv == 0.0)
        throw std::domain_error("cosine of a zero vector");
    double c = dot(u, v) / (nu * nv);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

// Componentwise arithmetic mean; no normalization here.
inline std::vector<double> centroid(
    const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty())
        throw std::domain_error("centroid of an empty vector set");
    const std::size_t dim = vectors.front().size();
    std::vector<double> mean(dim, 0.0);
    for (const auto& v : vectors) {
        if (v.size() != dim)
            throw std::domain_error("centroid of mixed-dimension vectors");
        for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i];
    }
    for (double& c : mean) c /= static_cast<double>(vectors.size());
    return mean;
}

// ---------------------------------------------------------------------------
// Phrase vectors

struct PhraseVector {
    enum class Source { DirectLookup, TermCentroid };

    std::vector<double> vector;
    Source source = Source::DirectLookup;
    int covered_terms = 0;

    bool operator==(const PhraseVector&) const = default;
};

namespace detail {

inline std::vector<std::string> split_terms(std::string_view phrase,
                                            char sep = ' ') {
    std::vector<std::string> terms;
    std::string cur;
    for (char ch : phrase) {
        if (ch == sep) {
            if (!cur.empty()) terms.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) terms.push_back(std::move(cur));
    return terms;
}

}  // namespace detail

// Vector for a (lowercase) phrase: the stored vector when the phrase itself
// is a vocabulary entry (spaces mapped to the underscore convention), else
// the L2-normalized centroid of its in-vocabulary term vectors. Nothing when
// no term is covered.
inline std::optional<PhraseVector> phrase_vector(
    const EmbeddingVocabulary& vocab, std::string_view phrase) {
    if (phrase.empty())
        throw std::invalid_argument("phrase_vector of an empty phrase");
    std::string key(phrase);
    for (char& ch : key)
        if (ch == ' ') ch = '_';
    if (const auto it = vocab.entries.find(key); it != vocab.entries.end())
        return PhraseVector{it->second, PhraseVector::Source::DirectLookup, 1};

    std::vector<std::vector<double>> covered;
    for (const auto& term : detail::split_terms(phrase))
        if (const auto it = vocab.entries.find(term); it != vocab.entries.end())
            covered.push_back(it->second);
    if (covered.empty()) return std::nullopt;

    std::vector<double> mean = centroid(covered);
    const double n = norm(mean);
    if (n == 0.0) return std::nullopt;  // opposing term vectors cancelled
    for (double& c : mean) c /= n;
    return PhraseVector{std::move(mean), PhraseVector::Source::TermCentroid,
                        static_cast<int>(covered.size())};
}

}  // namespace intentskb
