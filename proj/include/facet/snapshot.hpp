#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "facet/ann.hpp"
#include "facet/corpus.hpp"
#include "facet/descriptors.hpp"
#include "facet/embedding.hpp"
#include "facet/kmeans.hpp"

namespace facet {

/// Partition of the corpus into global domain clusters.
struct GlobalClusterSet {
    ClusterModel model;                                // over document vectors, corpus order
    std::vector<std::vector<std::string>> members;     // paper ids per cluster, corpus order
    std::vector<std::vector<std::string>> descriptors; // top unigrams per cluster

    std::size_t k() const noexcept { return members.size(); }
};

struct BuildConfig {
    KMeansConfig kmeans{.k = 20, .max_iters = 100, .tol = 1e-4, .seed = 0, .n_init = 3};
    IndexParams index;
    DescriptorConfig descriptor;
};

/// Everything a serving process answers from. Immutable once built or loaded.
struct Snapshot {
    Corpus corpus;
    GlobalClusterSet clusters;
    std::vector<ClusterIndex> indices;           // indices[g].cluster_id() == g
    std::vector<std::uint64_t> abstract_hashes;  // corpus order
    std::shared_ptr<const EmbeddingProvider> sentence_provider;
    nlohmann::json manifest;

    std::uint32_t cluster_of(std::size_t doc_index) const { return clusters.model.assignments.at(doc_index); }
};

// ---------------------------------------------------------------------------
// Cluster model file
// ---------------------------------------------------------------------------

inline constexpr std::string_view kClusterModelMagic = "FACETKMN";
inline constexpr std::uint32_t kClusterModelVersion = 1;

/// Layout: magic, u32 version, u32 k, u32 dim, u64 n, f64 inertia,
/// k*dim f32 centroids, n u32 assignments, k u64 sizes.
inline void save_cluster_model(const ClusterModel& m, const std::string& path) {
    io::Writer w(path);
    w.magic(kClusterModelMagic);
    w.u32(kClusterModelVersion);
    w.u32(static_cast<std::uint32_t>(m.k()));
    w.u32(static_cast<std::uint32_t>(m.centroids.dim()));
    w.u64(m.assignments.size());
    w.f64(m.inertia);
    w.floats(m.centroids.data());
    for (auto a : m.assignments) w.u32(a);
    for (auto s : m.sizes) w.u64(s);
    w.close();
}

inline ClusterModel load_cluster_model(const std::string& path) {
    io::Reader r(path);
    r.expect_magic(kClusterModelMagic);
    if (r.u32() != kClusterModelVersion) throw FormatError("unsupported cluster model version: " + path);
    ClusterModel m;
    const auto k = r.u32();
    const auto dim = r.u32();
    const auto n = r.u64();
    m.inertia = r.f64();
    m.centroids = Matrix(k, dim);
    r.floats(m.centroids.data());
    m.assignments.resize(n);
    for (auto& a : m.assignments) {
        a = r.u32();
        if (a >= k) throw FormatError("cluster assignment out of range in " + path);
    }
    m.sizes.resize(k);
    for (auto& s : m.sizes) s = r.u64();
    return m;
}

// ---------------------------------------------------------------------------
// Build pipeline
// ---------------------------------------------------------------------------

inline std::vector<std::string> document_texts(const Corpus& corpus) {
    std::vector<std::string> out;
    out.reserve(corpus.size());
    for (const auto& d : corpus.documents()) out.push_back(document_text(d));
    return out;
}

inline std::vector<std::string> sentence_texts(const Corpus& corpus) {
    std::vector<std::string> out;
    out.reserve(corpus.stats().sentence_count);
    for (const auto& d : corpus.documents())
        for (const auto& s : d.sentences) out.push_back(s.text);
    return out;
}

/// Groups documents by assignment and extracts per-cluster descriptors from
/// titles and abstracts.
inline GlobalClusterSet make_global_clusters(const Corpus& corpus, ClusterModel model,
                                             const DescriptorConfig& dcfg) {
    GlobalClusterSet g;
    g.members.resize(model.k());
    std::vector<std::vector<std::string>> tokens(model.k());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& d = corpus.documents()[i];
        const auto c = model.assignments.at(i);
        g.members[c].push_back(d.paper_id);
        for (auto& t : text::tokenize(d.title + " " + d.abstract)) tokens[c].push_back(std::move(t));
    }
    g.descriptors = model.k() >= 2 ? descriptors(tokens, dcfg) : std::vector<std::vector<std::string>>(model.k());
    g.model = std::move(model);
    return g;
}

/// One index per global cluster over the sentences of its member documents.
/// `sentence_vectors` follows corpus sentence order.
inline std::vector<ClusterIndex> build_indices(const Corpus& corpus, const ClusterModel& model,
                                               const std::vector<Vector>& sentence_vectors,
                                               const IndexParams& params) {
    std::vector<std::vector<ClusterIndex::Entry>> entries(model.k());
    std::size_t s = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& d = corpus.documents()[i];
        for (const auto& sent : d.sentences)
            entries[model.assignments.at(i)].push_back(
                {{d.paper_id, static_cast<std::uint32_t>(sent.position)}, sentence_vectors.at(s++)});
    }
    std::vector<ClusterIndex> out;
    out.reserve(model.k());
    for (std::uint32_t g = 0; g < model.k(); ++g)
        out.push_back(ClusterIndex::build(g, std::move(entries[g]), params));
    return out;
}

inline nlohmann::json make_manifest(const Snapshot& s, const EmbeddingProvider& doc_provider, const BuildConfig& cfg) {
    return {{"format", "facet-snapshot"},
            {"version", 1},
            {"documents", s.corpus.stats().document_count},
            {"sentences", s.corpus.stats().sentence_count},
            {"clusters", s.clusters.k()},
            {"document_provider", doc_provider.name()},
            {"document_dimension", doc_provider.dimension()},
            {"sentence_provider", s.sentence_provider->name()},
            {"sentence_dimension", s.sentence_provider->dimension()},
            {"kmeans", {{"k", cfg.kmeans.k}, {"seed", cfg.kmeans.seed}, {"n_init", cfg.kmeans.n_init},
                        {"max_iters", cfg.kmeans.max_iters}, {"tol", cfg.kmeans.tol}}},
            {"index", {{"metric", "ip"}, {"max_degree", cfg.index.max_degree},
                       {"ef_construction", cfg.index.ef_construction}, {"ef_search", cfg.index.ef_search},
                       {"exact_threshold", cfg.index.exact_threshold}, {"seed", cfg.index.seed}}},
            {"inertia", s.clusters.model.inertia}};
}

struct BuildCaches {
    EmbeddingCache* documents = nullptr;
    EmbeddingCache* sentences = nullptr;
};

/// ingest -> embed -> cluster -> index.
inline Snapshot build_snapshot(Corpus corpus, const EmbeddingProvider& doc_provider,
                               std::shared_ptr<const EmbeddingProvider> sentence_provider,
                               const BuildConfig& cfg = {}, BuildCaches caches = {}) {
    if (doc_provider.kind() != EmbeddingKind::document)
        throw PreconditionError("build_snapshot: document provider must be document-level");
    if (!sentence_provider || sentence_provider->kind() != EmbeddingKind::sentence)
        throw PreconditionError("build_snapshot: sentence provider must be sentence-level");

    const auto doc_vecs = embed_cached(doc_provider, document_texts(corpus), caches.documents);
    auto model = kmeans(Matrix::from_rows(doc_vecs), cfg.kmeans);
    const auto sent_vecs = embed_cached(*sentence_provider, sentence_texts(corpus), caches.sentences);

    Snapshot s;
    s.indices = build_indices(corpus, model, sent_vecs, cfg.index);
    s.clusters = make_global_clusters(corpus, std::move(model), cfg.descriptor);
    for (const auto& d : corpus.documents()) s.abstract_hashes.push_back(abstract_hash(d.abstract));
    s.corpus = std::move(corpus);
    s.sentence_provider = std::move(sentence_provider);
    s.manifest = make_manifest(s, doc_provider, cfg);
    return s;
}

// ---------------------------------------------------------------------------
// Snapshot directory
// ---------------------------------------------------------------------------
//
//   manifest.json      build metadata (no timestamps: rebuilds are byte-identical)
//   corpus.jsonl       versioned corpus file
//   clusters.bin       global k-means model
//   clusters.json      members and descriptors per cluster
//   index/cluster_NNN.idx

inline std::string index_file_name(std::uint32_t g) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cluster_%03u.idx", g);
    return buf;
}

inline void write_text_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << content;
    if (!out) throw IoError("write failed: " + p.string());
}

inline nlohmann::json clusters_json(const GlobalClusterSet& g) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t c = 0; c < g.k(); ++c)
        arr.push_back({{"id", c}, {"size", g.members[c].size()}, {"descriptors", g.descriptors[c]},
                       {"members", g.members[c]}});
    return {{"clusters", std::move(arr)}};
}

inline void save_snapshot(const Snapshot& s, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "index");
    save_corpus(s.corpus, (dir / "corpus.jsonl").string());
    save_cluster_model(s.clusters.model, (dir / "clusters.bin").string());
    write_text_file(dir / "clusters.json", clusters_json(s.clusters).dump(1) + "\n");
    for (const auto& idx : s.indices) idx.save((dir / "index" / index_file_name(idx.cluster_id())).string());
    write_text_file(dir / "manifest.json", s.manifest.dump(2) + "\n");
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot read " + p.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FormatError("malformed JSON in " + p.string());
    return j;
}

inline Snapshot load_snapshot(const std::filesystem::path& dir,
                              std::shared_ptr<const EmbeddingProvider> sentence_provider) {
    Snapshot s;
    s.manifest = read_json_file(dir / "manifest.json");
    if (s.manifest.value("format", "") != "facet-snapshot" || s.manifest.value("version", 0) != 1)
        throw FormatError("not a facet snapshot: " + dir.string());
    s.corpus = ingest((dir / "corpus.jsonl").string());
    s.clusters.model = load_cluster_model((dir / "clusters.bin").string());
    if (s.clusters.model.assignments.size() != s.corpus.size())
        throw FormatError("cluster model does not match corpus in " + dir.string());

    const auto cj = read_json_file(dir / "clusters.json");
    for (const auto& c : cj.at("clusters")) {
        s.clusters.members.push_back(c.at("members").get<std::vector<std::string>>());
        s.clusters.descriptors.push_back(c.at("descriptors").get<std::vector<std::string>>());
    }
    if (s.clusters.k() != s.clusters.model.k()) throw FormatError("clusters.json does not match clusters.bin");

    std::size_t total = 0;
    for (std::uint32_t g = 0; g < s.clusters.k(); ++g) {
        s.indices.push_back(ClusterIndex::load((dir / "index" / index_file_name(g)).string()));
        if (s.indices.back().cluster_id() != g) throw FormatError("index file for cluster " + std::to_string(g));
        total += s.indices.back().size();
    }
    if (total != s.corpus.stats().sentence_count)
        throw FormatError("indices do not cover the corpus sentences in " + dir.string());

    if (!sentence_provider || sentence_provider->kind() != EmbeddingKind::sentence)
        throw PreconditionError("load_snapshot: sentence-level provider required");
    if (!s.indices.empty() && sentence_provider->dimension() != s.indices.front().dimension())
        throw ContractError("sentence provider dimension " + std::to_string(sentence_provider->dimension()) +
                            " != index dimension " + std::to_string(s.indices.front().dimension()));
    s.sentence_provider = std::move(sentence_provider);
    for (const auto& d : s.corpus.documents()) s.abstract_hashes.push_back(abstract_hash(d.abstract));
    return s;
}

}  // namespace facet
