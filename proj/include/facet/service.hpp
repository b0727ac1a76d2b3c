#pragma once

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "facet/search.hpp"

namespace facet::service {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Response {
    int status = 200;
    std::string body;  // JSON, or empty for 204
};

// ---------------------------------------------------------------------------
// JSON encoding
// ---------------------------------------------------------------------------

inline json span_json(const MatchSpan& s) {
    return {{"field", s.field == MatchSpan::Field::title ? "title" : "abstract"}, {"begin", s.begin}, {"end", s.end}};
}

inline json hit_json(const GroupHit& h) {
    json spans = json::array();
    for (const auto& s : h.spans) spans.push_back(span_json(s));
    return {{"paper_id", h.hit.ref.doc_id},
            {"best_sentence_position", h.hit.ref.position},
            {"score", h.hit.score},
            {"cluster_id", h.hit.cluster_id},
            {"sentence", h.sentence},
            {"title", h.title},
            {"abstract", h.abstract},
            {"spans", std::move(spans)}};
}

inline json group_json(std::uint32_t id, const std::vector<std::string>& desc, const std::vector<GroupHit>& hits) {
    json arr = json::array();
    for (const auto& h : hits) arr.push_back(hit_json(h));
    return {{"cluster_id", id}, {"descriptors", desc}, {"hits", std::move(arr)}};
}

inline json zoom_json(const ZoomResult& z) {
    json groups = json::array();
    for (const auto& g : z.groups) {
        json hits = json::array();
        std::set<std::uint32_t> provenance;
        for (const auto& h : g.hits) {
            hits.push_back(hit_json(h));
            provenance.insert(h.hit.cluster_id);
        }
        groups.push_back({{"local_id", g.id}, {"descriptors", g.descriptors}, {"provenance", provenance},
                          {"hits", std::move(hits)}});
    }
    return {{"selected_clusters", z.selected}, {"local_groups", std::move(groups)}, {"hit_count", z.hit_count()}};
}

inline Response error_response(int status, const std::string& message) {
    return {status, json{{"error", message}}.dump()};
}

// ---------------------------------------------------------------------------
// Query cache
// ---------------------------------------------------------------------------

/// Query vectors cached for zoom-in, keyed by a content hash of
/// (abstract, sentence_index). Entries expire after `ttl`.
class QueryCache {
public:
    struct Entry {
        Query query;
        std::size_t t = 10;
        Clock::time_point expires;
    };

    explicit QueryCache(std::chrono::seconds ttl = std::chrono::hours(1), std::function<Clock::time_point()> now = Clock::now)
        : ttl_(ttl), now_(std::move(now)) {}

    static std::string key(const std::string& abstract, std::size_t sentence_index) {
        return hex64(fnv1a64(std::to_string(sentence_index), fnv1a64(abstract + '\x1f')));
    }

    std::string put(Query q, std::size_t t) {
        auto id = key(q.abstract, q.sentence_index);
        std::lock_guard lock(mu_);
        evict_locked();
        entries_.insert_or_assign(id, Entry{std::move(q), t, now_() + ttl_});
        return id;
    }

    std::optional<Entry> get(const std::string& id) {
        std::lock_guard lock(mu_);
        auto it = entries_.find(id);
        if (it == entries_.end()) return std::nullopt;
        if (now_() >= it->second.expires) {
            entries_.erase(it);
            return std::nullopt;
        }
        return it->second;
    }

private:
    void evict_locked() {
        const auto t = now_();
        std::erase_if(entries_, [&](const auto& kv) { return t >= kv.second.expires; });
    }

    std::chrono::seconds ttl_;
    std::function<Clock::time_point()> now_;
    std::mutex mu_;
    std::unordered_map<std::string, Entry> entries_;
};

// ---------------------------------------------------------------------------
// Feedback
// ---------------------------------------------------------------------------

struct Feedback {
    std::string session_id;
    std::string paper_id;
    int novelty = 0;  // 1 seen this exact paper, 2 similar ideas before, 3 nothing like this before
    bool relevance = false;
    std::string timestamp;

    friend bool operator==(const Feedback&, const Feedback&) = default;
};

inline json to_json(const Feedback& f) {
    return {{"session_id", f.session_id}, {"paper_id", f.paper_id}, {"novelty", f.novelty},
            {"relevance", f.relevance}, {"timestamp", f.timestamp}};
}

inline std::string utc_timestamp() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Validates a feedback body. Throws PreconditionError on violations.
inline Feedback parse_feedback(const json& j) {
    if (!j.is_object()) throw PreconditionError("feedback body must be an object");
    auto str = [&](const char* k) {
        if (!j.contains(k) || !j[k].is_string() || text::trim(j[k].get<std::string>()).empty())
            throw PreconditionError(std::string("feedback: '") + k + "' must be a non-empty string");
        return j[k].get<std::string>();
    };
    Feedback f;
    f.session_id = str("session_id");
    f.paper_id = str("paper_id");
    if (!j.contains("novelty") || !j["novelty"].is_number_integer())
        throw PreconditionError("feedback: 'novelty' must be an integer in {1, 2, 3}");
    f.novelty = j["novelty"].get<int>();
    if (f.novelty < 1 || f.novelty > 3) throw PreconditionError("feedback: 'novelty' must be 1, 2 or 3");
    if (!j.contains("relevance") || !j["relevance"].is_boolean())
        throw PreconditionError("feedback: 'relevance' must be a boolean");
    f.relevance = j["relevance"].get<bool>();
    f.timestamp = j.contains("timestamp") && j["timestamp"].is_string() ? j["timestamp"].get<std::string>()
                                                                          : utc_timestamp();
    return f;
}

/// Append-only line-delimited feedback log. Writes are serialized.
class FeedbackLog {
public:
    explicit FeedbackLog(std::string path) : path_(std::move(path)) {}

    void append(const Feedback& f) {
        std::lock_guard lock(mu_);
        std::ofstream out(path_, std::ios::app);
        if (!out) throw IoError("cannot open feedback log " + path_);
        out << to_json(f).dump() << '\n';
        out.flush();
        if (!out) throw IoError("feedback log write failed: " + path_);
    }

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::mutex mu_;
};

/// Replays a feedback log; the latest record per (session, paper) wins.
inline std::map<std::pair<std::string, std::string>, Feedback> fold_feedback(const std::string& path) {
    std::map<std::pair<std::string, std::string>, Feedback> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;
        try {
            auto f = parse_feedback(j);
            out.insert_or_assign({f.session_id, f.paper_id}, std::move(f));
        } catch (const PreconditionError&) {
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// API
// ---------------------------------------------------------------------------

struct ApiOptions {
    SearchConfig search;
    std::chrono::seconds query_ttl = std::chrono::hours(1);
    std::string feedback_log = "feedback.jsonl";
    std::string cors_origin = "*";
    std::function<Clock::time_point()> clock = Clock::now;
};

/// Request handlers over an immutable snapshot. Snapshot replacement is an
/// atomic pointer swap; in-flight requests keep the snapshot they started on.
class Api {
public:
    Api(std::shared_ptr<const Snapshot> snapshot, ApiOptions opts)
        : opts_(std::move(opts)),
          snapshot_(std::move(snapshot)),
          cache_(opts_.query_ttl, opts_.clock),
          feedback_(opts_.feedback_log) {}

    std::shared_ptr<const Snapshot> snapshot() const {
        std::lock_guard lock(snap_mu_);
        return snapshot_;
    }

    void replace_snapshot(std::shared_ptr<const Snapshot> s) {
        std::lock_guard lock(snap_mu_);
        snapshot_ = std::move(s);
    }

    const ApiOptions& options() const noexcept { return opts_; }

    /// POST /api/search {abstract, sentence_index, t?, filter?}
    Response search(const std::string& body) {
        return guarded([&] {
            const auto j = parse_body(body);
            if (!j.contains("abstract") || !j["abstract"].is_string())
                throw PreconditionError("'abstract' must be a string");
            if (!j.contains("sentence_index") || !j["sentence_index"].is_number_unsigned())
                throw PreconditionError("'sentence_index' must be a non-negative integer");
            SearchConfig cfg = opts_.search;
            if (j.contains("t")) {
                if (!j["t"].is_number_unsigned() || j["t"].get<std::size_t>() < 1)
                    throw PreconditionError("'t' must be a positive integer");
                cfg.t = j["t"].get<std::size_t>();
            }
            const auto snap = snapshot();
            std::optional<std::string> paper_id;
            if (j.contains("paper_id") && j["paper_id"].is_string()) paper_id = j["paper_id"].get<std::string>();
            auto q = make_query(j["abstract"].get<std::string>(), j["sentence_index"].get<std::size_t>(),
                                *snap->sentence_provider, paper_id);
            auto groups = faceted_search(q, cfg, *snap);
            if (j.contains("filter") && j["filter"].is_string()) groups = keyword_filter(std::move(groups), j["filter"].get<std::string>());

            json out;
            out["sentences"] = q.sentences;
            out["sentence_index"] = q.sentence_index;
            out["t"] = cfg.t;
            json arr = json::array();
            for (const auto& g : groups) arr.push_back(group_json(g.cluster_id, g.descriptors, g.hits));
            out["groups"] = std::move(arr);
            out["query_id"] = cache_.put(std::move(q), cfg.t);
            return Response{200, out.dump()};
        });
    }

    /// POST /api/zoom {query_id, selected_clusters, l?, m?, filter?}
    Response zoom(const std::string& body) {
        return guarded([&]() -> Response {
            const auto j = parse_body(body);
            if (!j.contains("query_id") || !j["query_id"].is_string())
                throw PreconditionError("'query_id' must be a string");
            auto entry = cache_.get(j["query_id"].get<std::string>());
            if (!entry) return error_response(404, "unknown or expired query_id");
            if (!j.contains("selected_clusters") || !j["selected_clusters"].is_array())
                throw PreconditionError("'selected_clusters' must be an array");
            if (j["selected_clusters"].empty()) throw PreconditionError("'selected_clusters' is empty");
            std::vector<std::uint32_t> selected;
            for (const auto& c : j["selected_clusters"]) {
                if (!c.is_number_unsigned()) throw PreconditionError("cluster ids must be non-negative integers");
                selected.push_back(c.get<std::uint32_t>());
            }
            SearchConfig cfg = opts_.search;
            cfg.t = entry->t;
            for (const char* key : {"l", "m"}) {
                if (!j.contains(key)) continue;
                if (!j[key].is_number_unsigned()) throw PreconditionError(std::string("'") + key + "' must be a positive integer");
                (key[0] == 'l' ? cfg.l : cfg.m) = j[key].get<std::size_t>();
            }
            auto z = zoom_in(entry->query, selected, cfg, *snapshot());
            if (j.contains("filter") && j["filter"].is_string()) z = keyword_filter(std::move(z), j["filter"].get<std::string>());
            auto out = zoom_json(z);
            out["query_id"] = j["query_id"];
            out["l"] = cfg.l;
            out["m"] = cfg.m;
            return Response{200, out.dump()};
        });
    }

    /// GET /api/clusters
    Response clusters() {
        return guarded([&] {
            const auto snap = snapshot();
            json arr = json::array();
            for (std::size_t c = 0; c < snap->clusters.k(); ++c)
                arr.push_back({{"id", c}, {"size", snap->clusters.members[c].size()},
                               {"descriptors", snap->clusters.descriptors[c]}});
            return Response{200, json{{"clusters", std::move(arr)}}.dump()};
        });
    }

    /// POST /api/feedback {session_id, paper_id, novelty, relevance}
    Response feedback(const std::string& body) {
        return guarded([&] {
            feedback_.append(parse_feedback(parse_body(body)));
            return Response{204, {}};
        });
    }

    /// Wires the handlers onto an httplib server, with CORS headers.
    void mount(httplib::Server& srv) {
        auto send = [this](httplib::Response& res, const Response& r) {
            res.status = r.status;
            res.set_header("Access-Control-Allow-Origin", opts_.cors_origin);
            if (r.status != 204) res.set_content(r.body, "application/json; charset=utf-8");
        };
        srv.Post("/api/search", [this, send](const httplib::Request& req, httplib::Response& res) { send(res, search(req.body)); });
        srv.Post("/api/zoom", [this, send](const httplib::Request& req, httplib::Response& res) { send(res, zoom(req.body)); });
        srv.Get("/api/clusters", [this, send](const httplib::Request&, httplib::Response& res) { send(res, clusters()); });
        srv.Post("/api/feedback", [this, send](const httplib::Request& req, httplib::Response& res) { send(res, feedback(req.body)); });
        srv.Options(R"(/api/.*)", [this](const httplib::Request&, httplib::Response& res) {
            res.status = 204;
            res.set_header("Access-Control-Allow-Origin", opts_.cors_origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        });
    }

private:
    static json parse_body(const std::string& body) {
        auto j = json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw PreconditionError("request body must be a JSON object");
        return j;
    }

    template <class F>
    Response guarded(F&& f) {
        try {
            return f();
        } catch (const PreconditionError& e) {
            return error_response(400, e.what());
        } catch (const RetryableError& e) {
            return error_response(503, e.what());
        } catch (const json::exception& e) {
            return error_response(400, e.what());
        } catch (const std::exception& e) {
            return error_response(500, e.what());
        }
    }

    ApiOptions opts_;
    mutable std::mutex snap_mu_;
    std::shared_ptr<const Snapshot> snapshot_;
    QueryCache cache_;
    FeedbackLog feedback_;
};

}  // namespace facet::service
