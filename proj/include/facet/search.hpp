#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "facet/snapshot.hpp"

namespace facet {

/// A faceted query: an abstract plus the index of the selected sentence.
struct Query {
    std::string abstract;
    std::size_t sentence_index = 0;
    std::vector<std::string> sentences;  // authoritative split
    std::string sentence;                // the selected sentence s_q
    Vector vector;                       // unit-normalized embedding of s_q
    std::optional<std::string> paper_id; // set when the query paper is known
    std::uint64_t abstract_hash = 0;
};

struct SearchConfig {
    std::size_t t = 10;   // hits per global cluster
    std::size_t l = 100;  // zoom-in retrieval budget; must exceed t
    std::size_t m = 5;    // local clusters in a zoom view
    bool dedup = true;    // at most one hit per paper per group
    std::uint64_t zoom_seed = 0;

    void validate() const {
        if (t < 1) throw PreconditionError("search config: t must be >= 1");
        if (m < 2) throw PreconditionError("search config: m must be >= 2");
        if (l <= t) throw PreconditionError("search config: l (" + std::to_string(l) + ") must be greater than t (" +
                                            std::to_string(t) + ")");
    }
};

struct MatchSpan {
    enum class Field { title, abstract } field;
    std::size_t begin = 0;  // byte offsets into the field
    std::size_t end = 0;

    friend bool operator==(const MatchSpan&, const MatchSpan&) = default;
};

struct GroupHit {
    Hit hit;               // hit.ref.position is the best-matching sentence
    std::string sentence;  // text of that sentence
    std::string title;
    std::string abstract;
    std::vector<MatchSpan> spans;  // keyword filter matches
};

struct ResultGroup {
    std::uint32_t cluster_id = 0;
    std::vector<std::string> descriptors;
    std::vector<GroupHit> hits;
};

struct LocalGroup {
    std::uint32_t id = 0;
    std::vector<std::string> descriptors;
    std::vector<GroupHit> hits;  // each hit.cluster_id is its global provenance
};

struct ZoomResult {
    std::vector<std::uint32_t> selected;
    std::vector<LocalGroup> groups;

    std::size_t hit_count() const {
        std::size_t n = 0;
        for (const auto& g : groups) n += g.hits.size();
        return n;
    }
};

/// Splits the abstract server-side and embeds the selected sentence.
inline Query make_query(const std::string& abstract, std::size_t sentence_index, const EmbeddingProvider& provider,
                        std::optional<std::string> paper_id = std::nullopt) {
    Query q;
    q.abstract = abstract;
    q.sentences = split_sentences(abstract);
    if (sentence_index >= q.sentences.size())
        throw PreconditionError("sentence_index " + std::to_string(sentence_index) + " out of range: abstract has " +
                                std::to_string(q.sentences.size()) + " sentence(s)");
    q.sentence_index = sentence_index;
    q.sentence = q.sentences[sentence_index];
    q.vector = std::move(embed_sentences(std::span<const std::string>(&q.sentence, 1), provider).front());
    q.paper_id = std::move(paper_id);
    q.abstract_hash = abstract_hash(abstract);
    return q;
}

namespace detail {

// Papers whose sentences must never be returned for this query.
inline std::unordered_set<std::string> excluded_papers(const Query& q, const Snapshot& s) {
    std::unordered_set<std::string> out;
    if (q.paper_id) out.insert(*q.paper_id);
    for (std::size_t i = 0; i < s.abstract_hashes.size(); ++i)
        if (s.abstract_hashes[i] == q.abstract_hash) out.insert(s.corpus.documents()[i].paper_id);
    return out;
}

// Top `want` hits of one index after self-exclusion and (optionally)
// per-paper dedup. Widens the underlying query until enough survive.
inline std::vector<Hit> retrieve(const ClusterIndex& index, std::span<const float> qv, std::size_t want, bool dedup,
                                 const std::unordered_set<std::string>& excluded) {
    std::size_t k = (dedup || !excluded.empty()) ? std::min(index.size(), want * 4) : std::min(index.size(), want);
    while (true) {
        std::vector<Hit> out;
        std::unordered_set<std::string> seen;
        for (auto& h : index.query(qv, k)) {
            if (excluded.contains(h.ref.doc_id)) continue;
            if (dedup && !seen.insert(h.ref.doc_id).second) continue;
            out.push_back(std::move(h));
            if (out.size() == want) return out;
        }
        if (k >= index.size()) return out;
        k = std::min(index.size(), k * 2);
    }
}

inline GroupHit expand(const Hit& h, const Corpus& corpus) {
    const auto* d = corpus.find(h.ref.doc_id);
    if (!d) throw Error("index refers to unknown paper " + h.ref.doc_id);
    return {h, d->sentences.at(h.ref.position).text, d->title, d->abstract, {}};
}

}  // namespace detail

/// Top-t sentences from every global cluster index, one group per cluster in
/// cluster-id order.
inline std::vector<ResultGroup> faceted_search(const Query& q, const SearchConfig& cfg, const Snapshot& s) {
    if (cfg.t < 1) throw PreconditionError("faceted_search: t must be >= 1");
    const auto excluded = detail::excluded_papers(q, s);
    std::vector<ResultGroup> groups;
    groups.reserve(s.indices.size());
    for (const auto& index : s.indices) {
        ResultGroup g;
        g.cluster_id = index.cluster_id();
        g.descriptors = s.clusters.descriptors.at(g.cluster_id);
        for (const auto& h : detail::retrieve(index, q.vector, cfg.t, cfg.dedup, excluded))
            g.hits.push_back(detail::expand(h, s.corpus));
        groups.push_back(std::move(g));
    }
    return groups;
}

/// Most frequent non-stopword tokens; used when a zoom view has one group
/// and TF-IDF has no contrast to work with.
inline std::vector<std::string> top_terms(const std::vector<std::string>& texts, std::size_t top_n) {
    std::map<std::string, std::size_t> tf;
    for (const auto& t : texts)
        for (auto& tok : text::tokenize(t)) ++tf[tok];
    std::vector<std::pair<std::string, std::size_t>> v(tf.begin(), tf.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size() && i < top_n; ++i) out.push_back(v[i].first);
    return out;
}

/// Retrieves l sentences from the selected clusters (budget split evenly,
/// then merged to the global top-l) and re-clusters their sentence vectors
/// into at most m local groups.
inline ZoomResult zoom_in(const Query& q, const std::vector<std::uint32_t>& selected, const SearchConfig& cfg,
                          const Snapshot& s, const DescriptorConfig& dcfg = {}) {
    cfg.validate();
    if (selected.empty()) throw PreconditionError("zoom_in: no clusters selected");
    std::set<std::uint32_t> sel(selected.begin(), selected.end());
    for (auto g : sel)
        if (g >= s.indices.size()) throw PreconditionError("zoom_in: unknown cluster id " + std::to_string(g));

    const auto excluded = detail::excluded_papers(q, s);
    const std::size_t per = (cfg.l + sel.size() - 1) / sel.size();
    std::vector<Hit> hits;
    for (auto g : sel) {
        auto part = detail::retrieve(s.indices[g], q.vector, per, cfg.dedup, excluded);
        hits.insert(hits.end(), part.begin(), part.end());
    }
    std::sort(hits.begin(), hits.end(), hit_before);
    if (cfg.dedup) {
        std::unordered_set<std::string> seen;
        std::erase_if(hits, [&](const Hit& h) { return !seen.insert(h.ref.doc_id).second; });
    }
    if (hits.size() > cfg.l) hits.resize(cfg.l);

    ZoomResult z;
    z.selected.assign(sel.begin(), sel.end());
    if (hits.empty()) return z;

    Matrix vecs(0, q.vector.size());
    for (const auto& h : hits) {
        const auto& idx = s.indices[h.cluster_id];
        vecs.push_back(idx.vectors().row(*idx.find(h.ref)));
    }
    const std::size_t k = std::min(cfg.m, detail::count_distinct_rows(vecs));
    const auto model = kmeans(vecs, {.k = k, .max_iters = 100, .tol = 1e-4, .seed = cfg.zoom_seed, .n_init = 3});

    std::vector<LocalGroup> groups(k);
    for (std::size_t i = 0; i < hits.size(); ++i) groups[model.assignments[i]].hits.push_back(detail::expand(hits[i], s.corpus));
    // Hits are already best-first; order groups by their best hit.
    std::sort(groups.begin(), groups.end(), [](const LocalGroup& a, const LocalGroup& b) {
        return hit_before(a.hits.front().hit, b.hits.front().hit);
    });

    std::vector<std::vector<std::string>> texts(k);
    for (std::size_t g = 0; g < k; ++g) {
        groups[g].id = static_cast<std::uint32_t>(g);
        for (const auto& h : groups[g].hits) texts[g].push_back(h.title + " " + h.abstract);
    }
    if (k >= 2) {
        const auto desc = descriptors_from_texts(texts, dcfg);
        for (std::size_t g = 0; g < k; ++g) groups[g].descriptors = desc[g];
    } else {
        groups[0].descriptors = top_terms(texts[0], dcfg.top_n);
    }
    z.groups = std::move(groups);
    return z;
}

// ---------------------------------------------------------------------------
// Keyword filter
// ---------------------------------------------------------------------------

/// Case-insensitive occurrences of `needle` (already lowercased) in `hay`.
inline std::vector<std::pair<std::size_t, std::size_t>> find_all_ci(std::string_view hay, const std::string& needle) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const auto lower = text::to_lower(hay);
    for (std::size_t pos = lower.find(needle); pos != std::string::npos; pos = lower.find(needle, pos + needle.size()))
        out.emplace_back(pos, pos + needle.size());
    return out;
}

/// Fills match spans for `keyword` over title and abstract; returns true if
/// the hit matches.
inline bool mark_keyword(GroupHit& h, const std::string& needle) {
    h.spans.clear();
    for (auto [b, e] : find_all_ci(h.title, needle)) h.spans.push_back({MatchSpan::Field::title, b, e});
    for (auto [b, e] : find_all_ci(h.abstract, needle)) h.spans.push_back({MatchSpan::Field::abstract, b, e});
    return !h.spans.empty();
}

inline std::string normalize_keyword(std::string_view keyword) {
    const auto k = text::trim(keyword);
    if (k.empty()) throw PreconditionError("keyword filter: keyword is empty");
    return text::to_lower(k);
}

/// Keeps hits whose title or abstract contains `keyword` (case-insensitive
/// substring), with match spans attached. Groups are kept even when empty.
inline std::vector<ResultGroup> keyword_filter(std::vector<ResultGroup> groups, std::string_view keyword) {
    const auto needle = normalize_keyword(keyword);
    for (auto& g : groups) std::erase_if(g.hits, [&](GroupHit& h) { return !mark_keyword(h, needle); });
    return groups;
}

inline ZoomResult keyword_filter(ZoomResult z, std::string_view keyword) {
    const auto needle = normalize_keyword(keyword);
    for (auto& g : z.groups) std::erase_if(g.hits, [&](GroupHit& h) { return !mark_keyword(h, needle); });
    return z;
}

}  // namespace facet
