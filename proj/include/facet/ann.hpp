#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "facet/common.hpp"
#include "facet/corpus.hpp"

namespace facet {

struct Hit {
    SentenceRef ref;
    float score = 0.0f;  // cosine similarity (inner product of unit vectors)
    std::uint32_t cluster_id = 0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

/// Result order: score descending, then (doc_id, position) ascending.
inline bool hit_before(const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ref < b.ref;
}

struct IndexParams {
    std::uint32_t max_degree = 16;        // M; layer 0 keeps up to 2*M links
    std::uint32_t ef_construction = 200;  // construction beam width
    std::uint32_t ef_search = 256;        // query beam width
    std::uint32_t exact_threshold = 1000; // below this many entries, no graph is built
    std::uint64_t seed = 0x1D8A5EEDULL;   // level-assignment seed

    friend bool operator==(const IndexParams&, const IndexParams&) = default;
};

inline constexpr float kUnitNormTolerance = 1e-3f;

/// Exact top-t by inner product over all entries. The oracle for the graph
/// search and the path used by small clusters.
inline std::vector<Hit> exact_query(std::span<const SentenceRef> refs, const Matrix& vectors,
                                    std::span<const float> q, std::size_t t, std::uint32_t cluster_id = 0) {
    if (refs.empty() || vectors.rows() != refs.size()) throw PreconditionError("exact_query: empty entry set");
    if (t == 0) throw PreconditionError("exact_query: t must be >= 1");
    if (q.size() != vectors.dim()) throw ContractError("exact_query: query dimension mismatch");
    std::vector<Hit> all;
    all.reserve(refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i) all.push_back({refs[i], dot(vectors.row(i), q), cluster_id});
    const std::size_t n = std::min(t, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), hit_before);
    all.resize(n);
    return all;
}

/// Nearest-neighbour index over the sentence vectors of one global cluster.
///
/// Clusters with at least `exact_threshold` entries get a hierarchical
/// navigable small-world graph; smaller ones are scanned exactly. Entries are
/// inserted in (doc_id, position) order with seeded level assignment, so a
/// build is a pure function of its inputs. Immutable after build().
class ClusterIndex {
public:
    struct Entry {
        SentenceRef ref;
        Vector vector;
    };

    ClusterIndex() = default;

    static ClusterIndex build(std::uint32_t cluster_id, std::vector<Entry> entries, const IndexParams& params = {}) {
        if (entries.empty()) throw PreconditionError("ClusterIndex::build: no sentences for cluster " +
                                                     std::to_string(cluster_id));
        if (params.max_degree < 2) throw PreconditionError("ClusterIndex::build: max_degree must be >= 2");
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.ref < b.ref; });
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (entries[i].ref == entries[i - 1].ref)
                throw PreconditionError("ClusterIndex::build: duplicate sentence " + entries[i].ref.doc_id);

        ClusterIndex idx;
        idx.cluster_id_ = cluster_id;
        idx.params_ = params;
        const std::size_t dim = entries.front().vector.size();
        idx.vectors_ = Matrix(0, dim);
        for (auto& e : entries) {
            if (e.vector.size() != dim) throw ContractError("ClusterIndex::build: dimension mismatch");
            if (std::abs(norm(e.vector) - 1.0) > kUnitNormTolerance)
                throw PreconditionError("ClusterIndex::build: vector for " + e.ref.doc_id + " is not unit-normalized");
            idx.vectors_.push_back(e.vector);
            idx.refs_.push_back(std::move(e.ref));
        }
        if (idx.refs_.size() >= params.exact_threshold) idx.build_graph();
        return idx;
    }

    std::uint32_t cluster_id() const noexcept { return cluster_id_; }
    std::size_t size() const noexcept { return refs_.size(); }
    std::size_t dimension() const noexcept { return vectors_.dim(); }
    bool is_exact() const noexcept { return links_.empty(); }
    const IndexParams& params() const noexcept { return params_; }
    const std::vector<SentenceRef>& refs() const noexcept { return refs_; }
    const Matrix& vectors() const noexcept { return vectors_; }

    /// Row of `ref` in vectors(), if indexed here.
    std::optional<std::size_t> find(const SentenceRef& ref) const {
        auto it = std::lower_bound(refs_.begin(), refs_.end(), ref);
        if (it == refs_.end() || *it != ref) return std::nullopt;
        return static_cast<std::size_t>(it - refs_.begin());
    }

    /// Approximately the `t` highest-scoring entries (exactly, for small
    /// clusters), sorted by hit_before. Returns min(t, size()) hits.
    std::vector<Hit> query(std::span<const float> q, std::size_t t) const {
        if (t == 0) throw PreconditionError("query: t must be >= 1");
        if (q.size() != dimension()) throw ContractError("query: dimension mismatch");
        if (is_exact()) return exact_query(refs_, vectors_, q, t, cluster_id_);

        std::uint32_t cur = entry_point_;
        float cur_sim = dot(vectors_.row(cur), q);
        for (int level = max_level_; level > 0; --level) cur = greedy_step(q, cur, cur_sim, level);

        const std::size_t ef = std::max<std::size_t>(params_.ef_search, t);
        auto found = search_layer(q, {{cur_sim, cur}}, ef, 0);
        std::vector<Hit> hits;
        hits.reserve(found.size());
        for (const auto& [sim, id] : found) hits.push_back({refs_[id], sim, cluster_id_});
        std::sort(hits.begin(), hits.end(), hit_before);
        if (hits.size() > t) hits.resize(t);
        return hits;
    }

    // --- persistence -------------------------------------------------------

    static constexpr std::string_view kMagic = "FACETIDX";
    static constexpr std::uint32_t kVersion = 1;

    /// Layout: magic, u32 version, metric "ip", u32 dim, params, u32 cluster
    /// id, u64 entry count, entries (ref + vector), then the graph (if any).
    void save(const std::string& path) const {
        io::Writer w(path);
        w.magic(kMagic);
        w.u32(kVersion);
        w.str("ip");
        w.u32(static_cast<std::uint32_t>(dimension()));
        w.u32(params_.max_degree);
        w.u32(params_.ef_construction);
        w.u32(params_.ef_search);
        w.u32(params_.exact_threshold);
        w.u64(params_.seed);
        w.u32(cluster_id_);
        w.u64(refs_.size());
        for (std::size_t i = 0; i < refs_.size(); ++i) {
            w.str(refs_[i].doc_id);
            w.u32(refs_[i].position);
            w.floats(vectors_.row(i));
        }
        w.u32(is_exact() ? 0 : 1);
        if (!is_exact()) {
            w.u32(entry_point_);
            w.u32(static_cast<std::uint32_t>(max_level_));
            for (const auto& node : links_) {
                w.u32(static_cast<std::uint32_t>(node.size()));
                for (const auto& nb : node) {
                    w.u32(static_cast<std::uint32_t>(nb.size()));
                    for (auto id : nb) w.u32(id);
                }
            }
        }
        w.close();
    }

    static ClusterIndex load(const std::string& path) {
        io::Reader r(path);
        r.expect_magic(kMagic);
        if (r.u32() != kVersion) throw FormatError("unsupported index version: " + path);
        if (r.str() != "ip") throw FormatError("unsupported index metric: " + path);
        ClusterIndex idx;
        const auto dim = r.u32();
        idx.params_.max_degree = r.u32();
        idx.params_.ef_construction = r.u32();
        idx.params_.ef_search = r.u32();
        idx.params_.exact_threshold = r.u32();
        idx.params_.seed = r.u64();
        idx.cluster_id_ = r.u32();
        const auto n = r.u64();
        idx.vectors_ = Matrix(n, dim);
        idx.refs_.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            idx.refs_[i].doc_id = r.str();
            idx.refs_[i].position = r.u32();
            r.floats(idx.vectors_.row(i));
        }
        if (r.u32() == 1) {
            idx.entry_point_ = r.u32();
            idx.max_level_ = static_cast<int>(r.u32());
            idx.links_.resize(n);
            for (auto& node : idx.links_) {
                node.resize(r.u32());
                for (auto& nb : node) {
                    nb.resize(r.u32());
                    for (auto& id : nb) {
                        id = r.u32();
                        if (id >= n) throw FormatError("dangling graph link in " + path);
                    }
                }
            }
        }
        return idx;
    }

private:
    using Scored = std::pair<float, std::uint32_t>;  // (similarity, node)

    std::size_t max_links(int level) const noexcept {
        return level == 0 ? 2u * params_.max_degree : params_.max_degree;
    }

    float sim(std::uint32_t a, std::uint32_t b) const noexcept { return dot(vectors_.row(a), vectors_.row(b)); }

    std::uint32_t greedy_step(std::span<const float> q, std::uint32_t cur, float& cur_sim, int level) const {
        bool improved = true;
        while (improved) {
            improved = false;
            for (auto nb : links_[cur][static_cast<std::size_t>(level)]) {
                const float s = dot(vectors_.row(nb), q);
                if (s > cur_sim || (s == cur_sim && nb < cur)) {
                    cur_sim = s;
                    cur = nb;
                    improved = true;
                }
            }
        }
        return cur;
    }

    // Beam search on one layer. Returns up to ef best nodes, best first.
    std::vector<Scored> search_layer(std::span<const float> q, std::vector<Scored> entry, std::size_t ef,
                                     int level) const {
        auto worse = [](const Scored& a, const Scored& b) {  // min-heap top = worst
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        };
        auto better = [](const Scored& a, const Scored& b) {  // max-heap top = best
            return a.first < b.first || (a.first == b.first && a.second > b.second);
        };
        std::vector<std::uint8_t> visited(refs_.size(), 0);
        std::priority_queue<Scored, std::vector<Scored>, decltype(better)> candidates(better);
        std::priority_queue<Scored, std::vector<Scored>, decltype(worse)> result(worse);
        for (const auto& e : entry) {
            visited[e.second] = 1;
            candidates.push(e);
            result.push(e);
        }
        while (result.size() > ef) result.pop();

        while (!candidates.empty()) {
            const auto c = candidates.top();
            if (result.size() >= ef && c.first < result.top().first) break;
            candidates.pop();
            for (auto nb : links_[c.second][static_cast<std::size_t>(level)]) {
                if (visited[nb]) continue;
                visited[nb] = 1;
                const float s = dot(vectors_.row(nb), q);
                if (result.size() < ef || s > result.top().first) {
                    candidates.push({s, nb});
                    result.push({s, nb});
                    if (result.size() > ef) result.pop();
                }
            }
        }
        std::vector<Scored> out;
        out.reserve(result.size());
        while (!result.empty()) {
            out.push_back(result.top());
            result.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

    // Diversity heuristic: keep a candidate only if it is closer to the base
    // than to every neighbour already kept. `cands` must be best-first.
    std::vector<std::uint32_t> select_neighbors(const std::vector<Scored>& cands, std::size_t m) const {
        std::vector<std::uint32_t> kept;
        for (const auto& [s, id] : cands) {
            if (kept.size() >= m) break;
            bool good = true;
            for (auto k : kept)
                if (sim(id, k) > s) {
                    good = false;
                    break;
                }
            if (good) kept.push_back(id);
        }
        return kept;
    }

    void connect(std::uint32_t from, std::uint32_t to, int level) {
        auto& nb = links_[from][static_cast<std::size_t>(level)];
        nb.push_back(to);
        const std::size_t cap = max_links(level);
        if (nb.size() <= cap) return;
        std::vector<Scored> cands;
        cands.reserve(nb.size());
        for (auto id : nb) cands.push_back({sim(from, id), id});
        std::sort(cands.begin(), cands.end(), [](const Scored& a, const Scored& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        });
        nb = select_neighbors(cands, cap);
    }

    void build_graph() {
        const std::size_t n = refs_.size();
        links_.assign(n, {});
        std::mt19937_64 rng(params_.seed ^ (static_cast<std::uint64_t>(cluster_id_) * 0x9E3779B97F4A7C15ULL));
        const double ml = 1.0 / std::log(static_cast<double>(params_.max_degree));
        std::vector<int> levels(n);
        for (auto& l : levels) {
            const double u = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
            l = std::min(static_cast<int>(-std::log(u) * ml), 16);
        }

        entry_point_ = 0;
        max_level_ = levels[0];
        links_[0].resize(static_cast<std::size_t>(levels[0]) + 1);
        for (std::uint32_t i = 1; i < n; ++i) {
            const int level = levels[i];
            links_[i].resize(static_cast<std::size_t>(level) + 1);
            const auto q = vectors_.row(i);

            std::uint32_t cur = entry_point_;
            float cur_sim = dot(vectors_.row(cur), q);
            for (int l = max_level_; l > level; --l) cur = greedy_step(q, cur, cur_sim, l);

            std::vector<Scored> entry{{cur_sim, cur}};
            for (int l = std::min(level, max_level_); l >= 0; --l) {
                auto cands = search_layer(q, entry, params_.ef_construction, l);
                const auto chosen = select_neighbors(cands, params_.max_degree);
                for (auto nb : chosen) {
                    links_[i][static_cast<std::size_t>(l)].push_back(nb);
                    connect(nb, i, l);
                }
                entry = std::move(cands);
            }
            if (level > max_level_) {
                max_level_ = level;
                entry_point_ = i;
            }
        }
    }

    std::uint32_t cluster_id_ = 0;
    IndexParams params_;
    std::vector<SentenceRef> refs_;
    Matrix vectors_;
    // links_[node][level] -> neighbour ids; empty when the index is exact.
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;
    std::uint32_t entry_point_ = 0;
    int max_level_ = 0;
};

/// recall@k of `approx` against `exact`: |approx ∩ exact| / |exact|.
inline double recall_at(const std::vector<Hit>& approx, const std::vector<Hit>& exact) {
    if (exact.empty()) return 1.0;
    std::size_t found = 0;
    for (const auto& e : exact)
        for (const auto& a : approx)
            if (a.ref == e.ref) {
                ++found;
                break;
            }
    return static_cast<double>(found) / static_cast<double>(exact.size());
}

}  // namespace facet
