#pragma once

// Knowledge-base data model: entity types, intent identifiers, quadruples and
// intent profiles, plus the canonical quad TSV serialization.
//
// Quad TSV format: one header line `#subject\tpredicate\tobject\tconfidence`,
// then one quadruple per line with the confidence printed with exactly four
// decimal digits. LF line endings, UTF-8.

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "intentskb/errors.hpp"

namespace intentskb {

// ---------------------------------------------------------------------------
// Entity types

// A two-level type from the reference KB, e.g. domain "aviation", type name
// "airline". Rendered "aviation.airline" as a label and "Aviation/Airline"
// in display form. Parts are lowercase [a-z0-9_]+.
struct EntityType {
    std::string domain;
    std::string type_name;

    std::string label() const { return domain + "." + type_name; }

    auto operator<=>(const EntityType&) const = default;
};

namespace detail {

inline bool valid_type_part(std::string_view part) {
    if (part.empty()) return false;
    for (char ch : part) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') ||
                        ch == '_';
        if (!ok) return false;
    }
    return true;
}

// "travel_destination" -> "TravelDestination"
inline std::string camel(std::string_view part) {
    std::string out;
    bool upper_next = true;
    for (char ch : part) {
        if (ch == '_') {
            upper_next = true;
            continue;
        }
        out += upper_next ? static_cast<char>(std::toupper(
                                static_cast<unsigned char>(ch)))
                          : ch;
        upper_next = false;
    }
    return out;
}

// "TravelDestination" -> "travel_destination"
inline std::string uncamel(std::string_view part) {
    std::string out;
    for (std::size_t i = 0; i < part.size(); ++i) {
        const char ch = part[i];
        if (std::isupper(static_cast<unsigned char>(ch))) {
            if (i > 0) out += '_';
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        } else {
            out += ch;
        }
    }
    return out;
}

}  // namespace detail

inline EntityType make_entity_type(std::string_view domain,
                                   std::string_view type_name) {
    if (!detail::valid_type_part(domain) || !detail::valid_type_part(type_name))
        throw std::invalid_argument("invalid entity type parts: '" +
                                    std::string(domain) + "', '" +
                                    std::string(type_name) + "'");
    return EntityType{std::string(domain), std::string(type_name)};
}

// Parses the "domain.type_name" label form.
inline EntityType parse_entity_type(std::string_view label) {
    const auto dot = label.find('.');
    if (dot == std::string_view::npos)
        throw std::invalid_argument("entity type label missing '.': " +
                                    std::string(label));
    return make_entity_type(label.substr(0, dot), label.substr(dot + 1));
}

// "Aviation/Airline" display form, as used in searchedForType objects.
inline std::string display_form(const EntityType& type) {
    return detail::camel(type.domain) + "/" + detail::camel(type.type_name);
}

inline EntityType parse_display_form(std::string_view display) {
    const auto slash = display.find('/');
    if (slash == std::string_view::npos)
        throw std::invalid_argument("type display form missing '/': " +
                                    std::string(display));
    return make_entity_type(detail::uncamel(display.substr(0, slash)),
                            detail::uncamel(display.substr(slash + 1)));
}

// ---------------------------------------------------------------------------
// Categories and predicates

enum class IntentCategory { Property = 0, Website = 1, Service = 2, Other = 3 };

inline constexpr IntentCategory kAllCategories[] = {
    IntentCategory::Property, IntentCategory::Website, IntentCategory::Service,
    IntentCategory::Other};
inline constexpr std::size_t kNumCategories = 4;

inline std::string to_string(IntentCategory c) {
    switch (c) {
        case IntentCategory::Property: return "Property";
        case IntentCategory::Website: return "Website";
        case IntentCategory::Service: return "Service";
        case IntentCategory::Other: return "Other";
    }
    throw std::invalid_argument("bad IntentCategory value");
}

inline std::optional<IntentCategory> try_parse_category(std::string_view s) {
    if (s == "Property") return IntentCategory::Property;
    if (s == "Website") return IntentCategory::Website;
    if (s == "Service") return IntentCategory::Service;
    if (s == "Other") return IntentCategory::Other;
    return std::nullopt;
}

inline IntentCategory parse_category(std::string_view s) {
    if (auto c = try_parse_category(s)) return *c;
    throw std::invalid_argument("unknown intent category: " + std::string(s));
}

enum class Predicate { SearchedForType = 0, OfCategory = 1, ExpressedBy = 2 };

inline std::string to_string(Predicate p) {
    switch (p) {
        case Predicate::SearchedForType: return "searchedForType";
        case Predicate::OfCategory: return "ofCategory";
        case Predicate::ExpressedBy: return "expressedBy";
    }
    throw std::invalid_argument("bad Predicate value");
}

inline Predicate parse_predicate(std::string_view s) {
    if (s == "searchedForType") return Predicate::SearchedForType;
    if (s == "ofCategory") return Predicate::OfCategory;
    if (s == "expressedBy") return Predicate::ExpressedBy;
    throw std::invalid_argument("unknown predicate: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Intent identifiers

// Unique intent identifier, rendered "<type label>-<seq>-<slug>". The slug is
// the nearest-refiner label, lowercased with whitespace runs collapsed to '_'.
struct IntentId {
    EntityType entity_type;
    int seq = 0;
    std::string slug;

    std::string to_string() const {
        return entity_type.label() + "-" + std::to_string(seq) + "-" + slug;
    }

    auto operator<=>(const IntentId&) const = default;
};

namespace detail {

inline std::string slugify(std::string_view label) {
    std::string out;
    bool pending_sep = false;
    for (char ch : label) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!out.empty()) pending_sep = true;
            continue;
        }
        if (pending_sep) {
            out += '_';
            pending_sep = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    return out;
}

}  // namespace detail

inline IntentId make_intent_id(const EntityType& entity_type, int seq,
                               std::string_view nearest_refiner) {
    if (seq < 0) throw std::invalid_argument("intent id seq must be >= 0");
    std::string slug = detail::slugify(nearest_refiner);
    if (slug.empty())
        throw std::invalid_argument("intent id needs a non-empty refiner label");
    return IntentId{entity_type, seq, std::move(slug)};
}

// Parses "<domain.type_name>-<seq>-<slug>". Type parts never contain '-', so
// the first '-' terminates the type label; the slug may itself contain '-'.
inline IntentId parse_intent_id(std::string_view s) {
    const auto first = s.find('-');
    if (first == std::string_view::npos)
        throw std::invalid_argument("malformed intent id: " + std::string(s));
    const EntityType type = parse_entity_type(s.substr(0, first));
    const auto second = s.find('-', first + 1);
    if (second == std::string_view::npos || second == first + 1)
        throw std::invalid_argument("malformed intent id: " + std::string(s));
    int seq = 0;
    for (std::size_t i = first + 1; i < second; ++i) {
        const char ch = s[i];
        if (ch < '0' || ch > '9')
            throw std::invalid_argument("non-numeric intent id seq: " +
                                        std::string(s));
        seq = seq * 10 + (ch - '0');
    }
    std::string slug(s.substr(second + 1));
    if (slug.empty())
        throw std::invalid_argument("empty intent id slug: " + std::string(s));
    return IntentId{type, seq, std::move(slug)};
}

// ---------------------------------------------------------------------------
// Quadruples and profiles

struct Quadruple {
    IntentId subject;
    Predicate predicate = Predicate::SearchedForType;
    std::string object;
    double confidence = 0.0;

    bool operator==(const Quadruple&) const = default;
};

struct RefinerEntry {
    std::string label;           // lexicalization, original spacing
    double confidence = 0.0;     // expressedBy confidence

    bool operator==(const RefinerEntry&) const = default;
};

struct IntentProfile {
    IntentId id;
    EntityType entity_type;
    IntentCategory category = IntentCategory::Other;
    double category_confidence = 0.0;     // alpha(c)
    std::vector<RefinerEntry> refiners;   // canonical order: conf desc, label asc
    double profile_confidence = 0.0;      // alpha(i)

    bool operator==(const IntentProfile&) const = default;
};

namespace detail {

inline std::string format_confidence(double c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", c);
    return buf;
}

// Nearest value with four decimal digits; quad TSV precision.
inline double quantize_confidence(double c) {
    double q = static_cast<double>(static_cast<long long>(c * 10000.0 + (c < 0 ? -0.5 : 0.5))) / 10000.0;
    return q;
}

// Profile confidence mixture. Shared between the KB builder and parse_kb so
// both paths produce bitwise-identical values.
inline double mixture_confidence(double category_conf,
                                 const std::vector<double>& expressed_confs) {
    double sum = 0.0;
    for (double c : expressed_confs) sum += c;
    const double mean = sum / static_cast<double>(expressed_confs.size());
    return 0.5 * (category_conf + mean);
}

inline bool confidence_in_range(double c) { return c >= 0.0 && c <= 1.0; }

inline std::vector<RefinerEntry> canonical_refiners(
    std::vector<RefinerEntry> refiners) {
    std::sort(refiners.begin(), refiners.end(),
              [](const RefinerEntry& a, const RefinerEntry& b) {
                  if (a.confidence != b.confidence)
                      return a.confidence > b.confidence;
                  return a.label < b.label;
              });
    return refiners;
}

}  // namespace detail

inline void validate_profile(const IntentProfile& p) {
    if (p.refiners.empty())
        throw std::invalid_argument("profile " + p.id.to_string() +
                                    " has no refiners");
    if (!detail::confidence_in_range(p.category_confidence) ||
        !detail::confidence_in_range(p.profile_confidence))
        throw std::invalid_argument("profile " + p.id.to_string() +
                                    " has confidence outside [0,1]");
    for (const auto& r : p.refiners)
        if (r.label.empty() || !detail::confidence_in_range(r.confidence))
            throw std::invalid_argument("profile " + p.id.to_string() +
                                        " has a bad refiner entry");
}

// Expands a profile into its quadruples: searchedForType (confidence 1),
// ofCategory, then one expressedBy per refiner ordered by descending
// confidence with lexicographic tie-break.
inline std::vector<Quadruple> profile_to_quadruples(const IntentProfile& p) {
    std::vector<Quadruple> quads;
    quads.reserve(2 + p.refiners.size());
    quads.push_back({p.id, Predicate::SearchedForType,
                     display_form(p.entity_type), 1.0});
    quads.push_back(
        {p.id, Predicate::OfCategory, to_string(p.category),
         p.category_confidence});
    for (const auto& r : detail::canonical_refiners(p.refiners))
        quads.push_back({p.id, Predicate::ExpressedBy, r.label, r.confidence});
    return quads;
}

inline constexpr std::string_view kQuadTsvHeader =
    "#subject\tpredicate\tobject\tconfidence";

// Writes the quad TSV. Profiles are emitted in canonical order (type label,
// then seq); confidences carry exactly four decimal digits.
inline void serialize_kb(const std::vector<IntentProfile>& kb,
                         std::ostream& out) {
    std::vector<const IntentProfile*> order;
    order.reserve(kb.size());
    for (const auto& p : kb) {
        validate_profile(p);
        order.push_back(&p);
    }
    std::sort(order.begin(), order.end(),
              [](const IntentProfile* a, const IntentProfile* b) {
                  const std::string la = a->entity_type.label();
                  const std::string lb = b->entity_type.label();
                  if (la != lb) return la < lb;
                  return a->id.seq < b->id.seq;
              });
    out << kQuadTsvHeader << '\n';
    for (const IntentProfile* p : order)
        for (const auto& q : profile_to_quadruples(*p))
            out << q.subject.to_string() << '\t' << to_string(q.predicate)
                << '\t' << q.object << '\t'
                << detail::format_confidence(q.confidence) << '\n';
}

inline std::string serialize_kb(const std::vector<IntentProfile>& kb) {
    std::ostringstream out;
    serialize_kb(kb, out);
    return out.str();
}

// Reads a quad TSV back into profiles. The profile confidence is not stored
// in the quads; it is recomputed with the same mixture used by the builder.
// Reports the offending line number on malformed input.
inline std::vector<IntentProfile> parse_kb(std::istream& in,
                                           const std::string& source = "") {
    auto fail = [&](std::size_t line, const std::string& reason) -> void {
        throw ParseError(source, line, reason);
    };

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) fail(1, "missing quad TSV header");
    ++lineno;
    if (line == std::string(kQuadTsvHeader) + "\r")
        fail(1, "CRLF line endings not allowed in quad TSV");
    if (line != kQuadTsvHeader) fail(1, "bad quad TSV header: " + line);

    std::vector<IntentProfile> kb;
    IntentProfile current;
    bool open = false;
    bool has_category = false;

    auto flush = [&]() {
        if (!open) return;
        if (!has_category)
            fail(lineno, "profile " + current.id.to_string() +
                             " ended without an ofCategory row");
        if (current.refiners.empty())
            fail(lineno, "profile " + current.id.to_string() +
                             " ended without expressedBy rows");
        std::vector<double> confs;
        confs.reserve(current.refiners.size());
        for (const auto& r : current.refiners) confs.push_back(r.confidence);
        current.profile_confidence =
            detail::mixture_confidence(current.category_confidence, confs);
        kb.push_back(std::move(current));
        current = IntentProfile{};
        open = false;
        has_category = false;
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() != 4)
            fail(lineno, "expected 4 tab-separated fields, got " +
                             std::to_string(fields.size()));

        IntentId subject;
        Predicate pred;
        double conf = 0.0;
        try {
            subject = parse_intent_id(fields[0]);
            pred = parse_predicate(fields[1]);
            std::size_t used = 0;
            conf = std::stod(fields[3], &used);
            if (used != fields[3].size())
                throw std::invalid_argument("trailing characters");
        } catch (const std::exception& e) {
            fail(lineno, e.what());
        }
        if (!detail::confidence_in_range(conf))
            fail(lineno, "confidence outside [0,1]: " + fields[3]);

        switch (pred) {
            case Predicate::SearchedForType: {
                flush();
                if (conf != 1.0)
                    fail(lineno, "searchedForType confidence must be 1");
                if (fields[2] != display_form(subject.entity_type))
                    fail(lineno, "searchedForType object '" + fields[2] +
                                     "' does not match subject type");
                current.id = subject;
                current.entity_type = subject.entity_type;
                open = true;
                break;
            }
            case Predicate::OfCategory: {
                if (!open || subject != current.id)
                    fail(lineno, "ofCategory row outside its profile");
                if (has_category)
                    fail(lineno, "duplicate ofCategory row for " +
                                     subject.to_string());
                const auto cat = try_parse_category(fields[2]);
                if (!cat) fail(lineno, "unknown category: " + fields[2]);
                current.category = *cat;
                current.category_confidence = conf;
                has_category = true;
                break;
            }
            case Predicate::ExpressedBy: {
                if (!open || subject != current.id || !has_category)
                    fail(lineno, "expressedBy row outside its profile");
                if (fields[2].empty()) fail(lineno, "empty refiner label");
                current.refiners.push_back({fields[2], conf});
                break;
            }
        }
    }
    ++lineno;
    flush();

    std::vector<std::string> ids;
    ids.reserve(kb.size());
    for (const auto& p : kb) ids.push_back(p.id.to_string());
    std::sort(ids.begin(), ids.end());
    const auto dup = std::adjacent_find(ids.begin(), ids.end());
    if (dup != ids.end())
        throw ParseError(source, 0, "duplicate intent id " + *dup);
    return kb;
}

inline std::vector<IntentProfile> parse_kb(const std::string& text,
                                           const std::string& source = "") {
    std::istringstream in(text);
    return parse_kb(in, source);
}

}  // namespace intentskb
