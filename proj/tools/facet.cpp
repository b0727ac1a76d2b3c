// facet: command-line front end for corpus ingestion, embedding, clustering,
// indexing, evaluation and serving.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "facet/eval.hpp"
#include "facet/http_provider.hpp"
#include "facet/service.hpp"
#include "facet/synthetic.hpp"

namespace fs = std::filesystem;
using namespace facet;

namespace {

EmbeddingKind parse_kind(const std::string& k) {
    if (k == "doc" || k == "document") return EmbeddingKind::document;
    if (k == "sent" || k == "sentence") return EmbeddingKind::sentence;
    throw PreconditionError("--kind must be doc or sent");
}

std::vector<std::string> read_keywords(const std::string& spec) {
    if (spec == "builtin18") return eval::builtin_keywords();
    std::ifstream in(spec);
    if (!in) throw IoError("cannot read keyword file " + spec);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (auto t = text::trim(line); !t.empty()) out.emplace_back(t);
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
}

void write_jsonl(const std::vector<Document>& docs, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& d : docs)
        out << nlohmann::json{{"paper_id", d.paper_id}, {"title", d.title}, {"abstract", d.abstract}, {"keywords", d.keywords}}
                   .dump()
            << '\n';
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Faceted query-by-example search over scientific abstracts"};
    app.require_subcommand(1);

    // corpus ingest
    auto* corpus_cmd = app.add_subcommand("corpus", "Corpus operations");
    corpus_cmd->require_subcommand(1);
    auto* ingest_cmd = corpus_cmd->add_subcommand("ingest", "Validate, sentence-split and persist a JSONL corpus");
    std::string ingest_in, ingest_out;
    std::optional<std::size_t> max_docs;
    ingest_cmd->add_option("--input", ingest_in, "JSONL records {paper_id, title, abstract, keywords?}")->required();
    ingest_cmd->add_option("--out", ingest_out, "Output corpus file")->required();
    ingest_cmd->add_option("--max-docs", max_docs, "Stop after this many valid documents");

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Embed documents or sentences into a vector cache");
    std::string embed_corpus, embed_provider = "fallback", embed_kind = "doc", embed_out;
    std::size_t embed_dim = 64;
    embed_cmd->add_option("--corpus", embed_corpus)->required();
    embed_cmd->add_option("--provider", embed_provider, "fallback | http:<url>");
    embed_cmd->add_option("--kind", embed_kind, "doc | sent");
    embed_cmd->add_option("--dim", embed_dim);
    embed_cmd->add_option("--out", embed_out)->required();

    // cluster
    auto* cluster_cmd = app.add_subcommand("cluster", "K-means over cached document vectors");
    std::string cluster_vectors, cluster_corpus, cluster_out;
    std::size_t cluster_k = 20;
    std::uint64_t cluster_seed = 0;
    cluster_cmd->add_option("--vectors", cluster_vectors)->required();
    cluster_cmd->add_option("--corpus", cluster_corpus, "Order points as the corpus documents (needed by index build)");
    cluster_cmd->add_option("--k", cluster_k);
    cluster_cmd->add_option("--seed", cluster_seed);
    cluster_cmd->add_option("--out", cluster_out)->required();

    // index build
    auto* index_cmd = app.add_subcommand("index", "Per-cluster sentence indices");
    index_cmd->require_subcommand(1);
    auto* index_build = index_cmd->add_subcommand("build", "Build one index file per global cluster");
    std::string idx_corpus, idx_sent_cache, idx_clusters, idx_out;
    IndexParams idx_params;
    index_build->add_option("--corpus", idx_corpus)->required();
    index_build->add_option("--sent-cache", idx_sent_cache)->required();
    index_build->add_option("--clusters", idx_clusters)->required();
    index_build->add_option("--out-dir", idx_out)->required();
    index_build->add_option("--max-degree", idx_params.max_degree);
    index_build->add_option("--ef-construction", idx_params.ef_construction);
    index_build->add_option("--ef-search", idx_params.ef_search);

    // build (whole pipeline)
    auto* build_cmd = app.add_subcommand("build", "ingest -> embed -> cluster -> index into a snapshot directory");
    std::string build_in, build_out, build_provider = "fallback";
    std::size_t build_dim = 64;
    BuildConfig build_cfg;
    std::optional<std::size_t> build_max_docs;
    build_cmd->add_option("--input", build_in)->required();
    build_cmd->add_option("--out-dir", build_out)->required();
    build_cmd->add_option("--provider", build_provider, "fallback | http:<url>");
    build_cmd->add_option("--dim", build_dim);
    build_cmd->add_option("--k", build_cfg.kmeans.k);
    build_cmd->add_option("--seed", build_cfg.kmeans.seed);
    build_cmd->add_option("--max-docs", build_max_docs);

    // eval purity
    auto* eval_cmd = app.add_subcommand("eval", "Cluster evaluation");
    eval_cmd->require_subcommand(1);
    auto* purity_cmd = eval_cmd->add_subcommand("purity", "Cluster purity against single-keyword labels");
    std::string ev_corpus, ev_keywords = "builtin18", ev_reps = "random,tfidf,doc", ev_out, ev_provider = "fallback";
    std::size_t ev_dim = 64;
    eval::EvalConfig ev_cfg;
    purity_cmd->add_option("--corpus", ev_corpus)->required();
    purity_cmd->add_option("--keywords", ev_keywords, "keyword file (one per line) or builtin18");
    purity_cmd->add_option("--k", ev_cfg.k);
    purity_cmd->add_option("--runs", ev_cfg.runs);
    purity_cmd->add_option("--seed", ev_cfg.base_seed);
    purity_cmd->add_flag("--strip-keywords", ev_cfg.remove_keywords, "Also evaluate with class keywords removed");
    purity_cmd->add_option("--reps", ev_reps, "comma list of random,tfidf,doc");
    purity_cmd->add_option("--provider", ev_provider);
    purity_cmd->add_option("--dim", ev_dim);
    purity_cmd->add_option("--out", ev_out, "CSV report path");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "HTTP API over a snapshot");
    std::string sv_dir, sv_provider = "fallback", sv_host = "0.0.0.0", sv_feedback, sv_cors = "*";
    int sv_port = 8080;
    serve_cmd->add_option("--snapshot-dir", sv_dir)->required();
    serve_cmd->add_option("--port", sv_port);
    serve_cmd->add_option("--host", sv_host);
    serve_cmd->add_option("--provider", sv_provider, "fallback | http:<url>");
    serve_cmd->add_option("--feedback-log", sv_feedback, "default: $FACET_FEEDBACK_LOG or <snapshot-dir>/feedback.jsonl");
    serve_cmd->add_option("--cors-origin", sv_cors);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic JSONL corpus");
    std::string sy_out;
    synthetic::TopicCorpusConfig sy_topic;
    bool sy_planted = false;
    std::size_t sy_classes = 6, sy_per_class = 100;
    synth_cmd->add_option("--out", sy_out)->required();
    synth_cmd->add_option("--docs", sy_topic.documents);
    synth_cmd->add_option("--topics", sy_topic.topics);
    synth_cmd->add_option("--seed", sy_topic.seed);
    synth_cmd->add_flag("--planted", sy_planted, "Keyword-labeled evaluation corpus instead of a topic corpus");
    synth_cmd->add_option("--classes", sy_classes, "planted: number of builtin keywords used as classes");
    synth_cmd->add_option("--per-class", sy_per_class);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest_cmd->parsed()) {
            auto c = ingest(ingest_in, max_docs);
            save_corpus(c, ingest_out);
            std::cout << "documents " << c.stats().document_count << " sentences " << c.stats().sentence_count
                      << " skipped " << c.stats().skipped << "\n";
        } else if (embed_cmd->parsed()) {
            const auto kind = parse_kind(embed_kind);
            auto provider = make_provider(embed_provider, kind, embed_dim);
            auto c = ingest(embed_corpus);
            EmbeddingCache cache = fs::exists(embed_out) ? EmbeddingCache::load(embed_out)
                                                         : EmbeddingCache(provider->name(), provider->dimension());
            const auto texts = kind == EmbeddingKind::document ? document_texts(c) : sentence_texts(c);
            embed_cached(*provider, texts, &cache);
            cache.save(embed_out);
            std::cout << "cached " << cache.size() << " vectors (" << provider->name() << ", dim "
                      << provider->dimension() << ")\n";
        } else if (cluster_cmd->parsed()) {
            auto cache = EmbeddingCache::load(cluster_vectors);
            Matrix pts(0, cache.dimension());
            if (!cluster_corpus.empty()) {
                for (const auto& t : document_texts(ingest(cluster_corpus))) {
                    auto v = cache.lookup(t);
                    if (!v) throw Error("document vector missing from cache; run embed --kind doc first");
                    pts.push_back(*v);
                }
            } else {
                // Without a corpus, points follow the cache's ascending key order.
                for (auto key : cache.keys()) pts.push_back(*cache.get(key));
            }
            KMeansConfig cfg;
            cfg.k = cluster_k;
            cfg.seed = cluster_seed;
            auto model = kmeans(pts, cfg);
            save_cluster_model(model, cluster_out);
            std::cout << "k " << model.k() << " inertia " << model.inertia << "\n";
        } else if (index_build->parsed()) {
            auto c = ingest(idx_corpus);
            auto cache = EmbeddingCache::load(idx_sent_cache);
            auto model = load_cluster_model(idx_clusters);
            if (model.assignments.size() != c.size())
                throw PreconditionError("cluster model has " + std::to_string(model.assignments.size()) +
                                        " points, corpus has " + std::to_string(c.size()) + " documents");
            std::vector<Vector> sv;
            for (const auto& t : sentence_texts(c)) {
                auto v = cache.lookup(t);
                if (!v) throw Error("sentence vector missing from cache; run embed --kind sent first");
                sv.push_back(std::move(*v));
            }
            fs::create_directories(idx_out);
            std::size_t total = 0;
            for (const auto& idx : build_indices(c, model, sv, idx_params)) {
                idx.save((fs::path(idx_out) / index_file_name(idx.cluster_id())).string());
                total += idx.size();
            }
            std::cout << "indexed " << total << " sentences in " << model.k() << " clusters\n";
        } else if (build_cmd->parsed()) {
            auto c = ingest(build_in, build_max_docs);
            auto doc_p = make_provider(build_provider, EmbeddingKind::document, build_dim);
            std::shared_ptr<const EmbeddingProvider> sent_p = make_provider(build_provider, EmbeddingKind::sentence, build_dim);
            fs::create_directories(build_out);
            const auto doc_cache_path = (fs::path(build_out) / "doc_vectors.emb").string();
            const auto sent_cache_path = (fs::path(build_out) / "sent_vectors.emb").string();
            auto load_or_new = [](const std::string& p, const EmbeddingProvider& prov) {
                if (fs::exists(p)) {
                    auto cache = EmbeddingCache::load(p);
                    if (cache.provider() == prov.name() && cache.dimension() == prov.dimension()) return cache;
                }
                return EmbeddingCache(prov.name(), prov.dimension());
            };
            auto doc_cache = load_or_new(doc_cache_path, *doc_p);
            auto sent_cache = load_or_new(sent_cache_path, *sent_p);
            auto snap = build_snapshot(std::move(c), *doc_p, sent_p, build_cfg, {&doc_cache, &sent_cache});
            save_snapshot(snap, build_out);
            doc_cache.save(doc_cache_path);
            sent_cache.save(sent_cache_path);
            std::cout << "snapshot " << build_out << ": " << snap.corpus.size() << " documents, "
                      << snap.corpus.stats().sentence_count << " sentences, " << snap.clusters.k() << " clusters\n";
        } else if (purity_cmd->parsed()) {
            ev_cfg.keywords = read_keywords(ev_keywords);
            ev_cfg.representations.clear();
            std::stringstream ss(ev_reps);
            for (std::string r; std::getline(ss, r, ',');)
                if (!text::trim(r).empty()) ev_cfg.representations.push_back(eval::parse_representation(text::trim(r)));
            auto c = ingest(ev_corpus);
            auto lc = eval::build_eval_corpus(c, ev_cfg.keywords);
            std::unique_ptr<EmbeddingProvider> dp;
            try {
                dp = make_provider(ev_provider, EmbeddingKind::document, ev_dim);
            } catch (const Error& e) {
                std::cerr << "warning: " << e.what() << "\n";
            }
            auto report = eval::run_eval(ev_cfg, lc, dp.get());
            std::cout << eval::format_table(report);
            if (!ev_out.empty()) write_file(ev_out, eval::to_csv(report));
        } else if (serve_cmd->parsed()) {
            std::shared_ptr<const EmbeddingProvider> sp = nullptr;
            auto manifest = read_json_file(fs::path(sv_dir) / "manifest.json");
            sp = make_provider(sv_provider, EmbeddingKind::sentence, manifest.at("sentence_dimension").get<std::size_t>());
            auto snap = std::make_shared<const Snapshot>(load_snapshot(sv_dir, sp));
            service::ApiOptions opts;
            if (!sv_feedback.empty())
                opts.feedback_log = sv_feedback;
            else if (const char* env = std::getenv("FACET_FEEDBACK_LOG"))
                opts.feedback_log = env;
            else
                opts.feedback_log = (fs::path(sv_dir) / "feedback.jsonl").string();
            opts.cors_origin = sv_cors;
            service::Api api(snap, opts);
            httplib::Server srv;
            api.mount(srv);
            g_server = &srv;
            std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
            std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
            std::cout << "serving " << snap->corpus.size() << " documents on " << sv_host << ":" << sv_port << "\n";
            if (!srv.listen(sv_host, sv_port)) throw IoError("cannot listen on port " + std::to_string(sv_port));
        } else if (synth_cmd->parsed()) {
            if (sy_planted) {
                synthetic::PlantedEvalConfig pc;
                const auto& kw = eval::builtin_keywords();
                pc.keywords.assign(kw.begin(), kw.begin() + static_cast<std::ptrdiff_t>(std::min(sy_classes, kw.size())));
                pc.docs_per_class = sy_per_class;
                pc.seed = sy_topic.seed;
                write_jsonl(synthetic::planted_eval_documents(pc), sy_out);
            } else {
                write_jsonl(synthetic::topic_documents(sy_topic), sy_out);
            }
            std::cout << "wrote " << sy_out << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
