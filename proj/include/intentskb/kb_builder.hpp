#pragma once

// Turns cluster sets plus categorization confidences into confidence-scored
// intent profiles. Profile confidences are stored at quad TSV precision
// (four decimals) so a serialized KB parses back bit-identically.

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "intentskb/clustering.hpp"
#include "intentskb/embeddings.hpp"
#include "intentskb/kb.hpp"

namespace intentskb {

struct ProfileDraft {
    struct Member {
        std::string label;
        PhraseVector vector;
        double classifier_confidence = 0.0;  // alpha(r)
    };

    EntityType entity_type;
    IntentCategory category = IntentCategory::Other;
    std::vector<Member> members;
};

// Similarity between one member and the centroid of all members, clamped to
// [0,1] for confidence use. A singleton cluster is its own centroid, so the
// confidence is exactly 1.
inline double expressed_by_confidence(
    const PhraseVector& member, const std::vector<PhraseVector>& members,
    bool* zero_centroid = nullptr) {
    if (members.empty())
        throw std::domain_error("expressed_by_confidence over empty cluster");
    if (zero_centroid) *zero_centroid = false;
    if (members.size() == 1) return 1.0;

    std::vector<std::vector<double>> vectors;
    vectors.reserve(members.size());
    for (const auto& m : members) vectors.push_back(m.vector);
    const std::vector<double> center = centroid(vectors);
    if (norm(center) == 0.0) {
        if (zero_centroid) *zero_centroid = true;
        return 0.0;
    }
    double c = cosine(member.vector, center);
    if (c < 0.0) c = 0.0;
    if (c > 1.0) c = 1.0;
    return c;
}

// alpha(c): mean classifier confidence over the profile members.
inline double category_confidence(const ProfileDraft& draft) {
    if (draft.members.empty())
        throw std::domain_error("category_confidence over empty draft");
    double sum = 0.0;
    for (const auto& m : draft.members) sum += m.classifier_confidence;
    return sum / static_cast<double>(draft.members.size());
}

// alpha(i): equal mixture of the category confidence and the mean
// expressedBy confidence.
inline double profile_confidence(double category_conf,
                                 const std::vector<double>& expressed_confs) {
    if (expressed_confs.empty())
        throw std::domain_error("profile_confidence needs expressedBy values");
    if (category_conf < 0.0 || category_conf > 1.0)
        throw std::invalid_argument("category confidence outside [0,1]");
    for (double c : expressed_confs)
        if (c < 0.0 || c > 1.0)
            throw std::invalid_argument("expressedBy confidence outside [0,1]");
    return detail::mixture_confidence(category_conf, expressed_confs);
}

struct ClusteredGroup {
    RefinerGroup group;
    ClusterSet clusters;
};

struct BuildResult {
    std::vector<IntentProfile> profiles;  // sorted by (type label, seq)
    std::size_t zero_centroid_members = 0;
};

// Builds one profile per cluster. Sequence numbers are assigned per type over
// clusters sorted by descending profile confidence, then slug; the profile is
// labeled by the member closest to the cluster centroid.
inline BuildResult build_profiles(
    const std::vector<ClusteredGroup>& groups,
    const std::map<std::pair<std::string, std::string>, double>&
        classifier_confidence) {
    struct Draft {
        IntentCategory category;
        double alpha_c;
        double alpha_i;
        std::string slug;
        std::vector<RefinerEntry> refiners;
    };

    BuildResult result;
    std::map<std::string, std::vector<Draft>> per_type;
    std::map<std::string, EntityType> type_of;

    for (const auto& cg : groups) {
        const std::string type_label = cg.group.entity_type.label();
        type_of.emplace(type_label, cg.group.entity_type);
        for (const auto& cluster : cg.clusters.clusters) {
            ProfileDraft draft;
            draft.entity_type = cg.group.entity_type;
            draft.category = cg.group.category;
            for (std::size_t idx : cluster) {
                const auto& member = cg.group.members[idx];
                const auto it = classifier_confidence.find(
                    {type_label, member.label});
                if (it == classifier_confidence.end())
                    throw std::runtime_error(
                        "no categorization confidence for refiner '" +
                        member.label + "' of type " + type_label);
                draft.members.push_back(
                    {member.label, member.vector, it->second});
            }

            std::vector<PhraseVector> vectors;
            vectors.reserve(draft.members.size());
            for (const auto& m : draft.members) vectors.push_back(m.vector);

            Draft out;
            out.category = draft.category;
            std::vector<double> expressed;
            for (const auto& m : draft.members) {
                bool zero = false;
                const double conf = detail::quantize_confidence(
                    expressed_by_confidence(m.vector, vectors, &zero));
                if (zero) ++result.zero_centroid_members;
                expressed.push_back(conf);
                out.refiners.push_back({m.label, conf});
            }
            out.alpha_c =
                detail::quantize_confidence(category_confidence(draft));
            out.alpha_i = detail::mixture_confidence(out.alpha_c, expressed);

            // Nearest refiner: highest expressedBy confidence, ties by label.
            std::size_t nearest = 0;
            for (std::size_t i = 1; i < out.refiners.size(); ++i) {
                const auto& cand = out.refiners[i];
                const auto& best = out.refiners[nearest];
                if (cand.confidence > best.confidence ||
                    (cand.confidence == best.confidence &&
                     cand.label < best.label))
                    nearest = i;
            }
            out.slug = detail::slugify(out.refiners[nearest].label);
            out.refiners = detail::canonical_refiners(std::move(out.refiners));
            per_type[type_label].push_back(std::move(out));
        }
    }

    for (auto& [type_label, drafts] : per_type) {
        std::sort(drafts.begin(), drafts.end(), [](const Draft& a,
                                                   const Draft& b) {
            if (a.alpha_i != b.alpha_i) return a.alpha_i > b.alpha_i;
            return a.slug < b.slug;
        });
        const EntityType& type = type_of.at(type_label);
        for (std::size_t seq = 0; seq < drafts.size(); ++seq) {
            Draft& d = drafts[seq];
            IntentProfile profile;
            profile.id =
                IntentId{type, static_cast<int>(seq), std::move(d.slug)};
            profile.entity_type = type;
            profile.category = d.category;
            profile.category_confidence = d.alpha_c;
            profile.refiners = std::move(d.refiners);
            profile.profile_confidence = d.alpha_i;
            result.profiles.push_back(std::move(profile));
        }
    }
    return result;
}

}  // namespace intentskb
