#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "facet/tfidf.hpp"

namespace facet {

struct DescriptorConfig {
    std::size_t top_n = 5;
    /// Terms present in more than this share of the clusters are dropped.
    double max_df_share = 0.6;
};

/// Top TF-IDF unigrams per cluster. Each cluster's token stream is one
/// pseudo-document; scores are tf * idf over those pseudo-documents, ties
/// broken lexicographically. A cluster without usable tokens gets an empty
/// list.
inline std::vector<std::vector<std::string>> descriptors(const std::vector<std::vector<std::string>>& cluster_tokens,
                                                         const DescriptorConfig& cfg = {}) {
    if (cluster_tokens.size() < 2) throw PreconditionError("descriptors: need at least 2 clusters");
    std::vector<std::vector<std::string>> out(cluster_tokens.size());

    bool any = false;
    for (const auto& t : cluster_tokens) any = any || !t.empty();
    if (!any) return out;

    const auto model = fit_tfidf_tokens(cluster_tokens);
    const double n = static_cast<double>(cluster_tokens.size());
    std::vector<bool> too_common(model.size());
    for (std::size_t i = 0; i < model.size(); ++i)
        too_common[i] = static_cast<double>(model.document_frequency()[i]) / n > cfg.max_df_share;

    for (std::size_t c = 0; c < cluster_tokens.size(); ++c) {
        const auto v = model.transform_unnormalized(cluster_tokens[c]);
        std::vector<std::pair<float, const std::string*>> scored;
        for (std::size_t i = 0; i < v.indices.size(); ++i)
            if (!too_common[v.indices[i]]) scored.emplace_back(v.values[i], &model.terms()[v.indices[i]]);
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return *a.second < *b.second;
        });
        for (std::size_t i = 0; i < scored.size() && i < cfg.top_n; ++i) out[c].push_back(*scored[i].second);
    }
    return out;
}

/// Convenience overload over raw texts per cluster.
inline std::vector<std::vector<std::string>> descriptors_from_texts(
    const std::vector<std::vector<std::string>>& cluster_texts, const DescriptorConfig& cfg = {}) {
    std::vector<std::vector<std::string>> tokens(cluster_texts.size());
    for (std::size_t c = 0; c < cluster_texts.size(); ++c)
        for (const auto& t : cluster_texts[c]) {
            auto toks = text::tokenize(t);
            tokens[c].insert(tokens[c].end(), toks.begin(), toks.end());
        }
    return descriptors(tokens, cfg);
}

}  // namespace facet
