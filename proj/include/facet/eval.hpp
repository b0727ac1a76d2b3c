#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "facet/corpus.hpp"
#include "facet/embedding.hpp"
#include "facet/kmeans.hpp"
#include "facet/tfidf.hpp"

namespace facet::eval {

/// The 18 sub-domain keywords that define the evaluation classes.
inline const std::vector<std::string>& builtin_keywords() {
    static const std::vector<std::string> kw = {
        "magnetic materials",  "carbon materials", "ceramics",      "optical properties",   "electrochemistry",
        "nanomaterials",       "alloys",           "photocatalysis", "semiconductors",      "solar cells",
        "fuel cells",          "polymers",         "composite materials", "biomaterials",   "thermodynamics",
        "lithium-ion batteries", "thin films",     "microstructure",
    };
    return kw;
}

enum class Representation { random, tfidf, document_embedding };
enum class Condition { keywords_present, keywords_removed };

inline std::string to_string(Representation r) {
    switch (r) {
        case Representation::random: return "random";
        case Representation::tfidf: return "tfidf";
        case Representation::document_embedding: return "doc";
    }
    return "?";
}

inline Representation parse_representation(std::string_view s) {
    if (s == "random") return Representation::random;
    if (s == "tfidf") return Representation::tfidf;
    if (s == "doc" || s == "embedding-doc") return Representation::document_embedding;
    throw PreconditionError("unknown representation '" + std::string(s) + "'");
}

inline std::string to_string(Condition c) {
    return c == Condition::keywords_present ? "keywords_present" : "keywords_removed";
}

struct EvalConfig {
    std::vector<std::string> keywords = builtin_keywords();
    std::size_t k = 18;
    std::size_t runs = 3;
    std::vector<Representation> representations = {Representation::random, Representation::tfidf,
                                                    Representation::document_embedding};
    /// When set, every representation is evaluated both with and without the
    /// class keywords in the text.
    bool remove_keywords = false;
    std::uint64_t base_seed = 0;
    std::size_t n_init = 3;
    std::size_t tfidf_max_features = 4096;
};

struct LabeledCorpus {
    std::vector<Document> documents;
    std::vector<std::string> labels;  // class keyword, parallel to documents
    std::map<std::string, std::size_t> class_counts;
};

inline std::string normalize_phrase(std::string_view s) { return text::to_lower(text::collapse_whitespace(s)); }

/// Keeps the documents whose keyword list hits exactly one class keyword;
/// that keyword becomes the label.
inline LabeledCorpus build_eval_corpus(const Corpus& corpus, const std::vector<std::string>& keywords) {
    if (keywords.empty()) throw PreconditionError("build_eval_corpus: no class keywords");
    std::map<std::string, std::string> classes;  // normalized -> as given
    for (const auto& k : keywords) {
        auto n = normalize_phrase(k);
        if (n.empty()) throw PreconditionError("build_eval_corpus: empty class keyword");
        if (!classes.emplace(n, k).second)
            throw PreconditionError("build_eval_corpus: duplicate class keyword '" + k + "'");
    }

    LabeledCorpus out;
    for (const auto& k : keywords) out.class_counts[k] = 0;
    for (const auto& d : corpus.documents()) {
        std::set<std::string> hit;
        for (const auto& kw : d.keywords)
            if (auto it = classes.find(normalize_phrase(kw)); it != classes.end()) hit.insert(it->second);
        if (hit.size() != 1) continue;
        out.documents.push_back(d);
        out.labels.push_back(*hit.begin());
        ++out.class_counts[*hit.begin()];
    }
    std::string empty;
    for (const auto& [k, n] : out.class_counts)
        if (n == 0) empty += (empty.empty() ? "" : ", ") + k;
    if (!empty.empty()) throw Error("build_eval_corpus: classes without documents: " + empty);
    return out;
}

inline constexpr std::string_view kEmptyPlaceholder = "[EMPTY]";

struct StrippedText {
    std::string text;
    bool emptied = false;  // nothing but keywords: replaced by the placeholder
};

/// Removes every keyword occurrence that sits on token boundaries
/// (case-insensitive; multi-word keywords match as whole phrases) and
/// collapses whitespace. Repeats until no keyword remains, so the result is a
/// fixed point.
inline StrippedText strip_keywords(std::string_view input, const std::vector<std::string>& keywords) {
    std::vector<std::string> needles;
    for (const auto& k : keywords)
        if (auto n = normalize_phrase(k); !n.empty()) needles.push_back(std::move(n));
    std::stable_sort(needles.begin(), needles.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });

    std::string cur = text::collapse_whitespace(input);
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& needle : needles) {
            std::string lower = text::to_lower(cur);
            std::string next;
            std::size_t from = 0;
            for (std::size_t pos = lower.find(needle); pos != std::string::npos; pos = lower.find(needle, pos + 1)) {
                if (pos < from) continue;
                const std::size_t end = pos + needle.size();
                const bool left_ok = pos == 0 || !text::is_alnum(lower[pos - 1]);
                const bool right_ok = end == lower.size() || !text::is_alnum(lower[end]);
                if (!left_ok || !right_ok) continue;
                next.append(cur, from, pos - from);
                next.push_back(' ');
                from = end;
                changed = true;
            }
            if (from == 0) continue;
            next.append(cur, from, std::string::npos);
            cur = text::collapse_whitespace(next);
        }
    }
    if (cur.empty()) return {std::string(kEmptyPlaceholder), true};
    return {cur, false};
}

struct EvalRow {
    Representation representation;
    Condition condition;
    std::vector<std::uint64_t> seeds;
    std::vector<double> purities;  // percent
    double mean = 0.0;             // percent
    std::optional<std::string> error;
};

struct EvalReport {
    std::size_t documents = 0;
    std::map<std::string, std::size_t> class_counts;
    std::size_t emptied_texts = 0;  // documents reduced to the placeholder by keyword removal
    std::vector<EvalRow> rows;

    const EvalRow* find(Representation r, Condition c) const {
        for (const auto& row : rows)
            if (row.representation == r && row.condition == c) return &row;
        return nullptr;
    }
};

namespace detail {

inline std::vector<std::uint32_t> random_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> a(n);
    for (auto& x : a) x = static_cast<std::uint32_t>(facet::detail::uniform_index(rng, k));
    return a;
}

inline Matrix tfidf_matrix(const std::vector<std::string>& texts, std::size_t max_features) {
    const auto model = fit_tfidf(texts, max_features);
    Matrix m(texts.size(), model.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto v = model.transform(texts[i]);
        auto row = m.row(i);
        for (std::size_t j = 0; j < v.indices.size(); ++j) row[v.indices[j]] = v.values[j];
    }
    return m;
}

}  // namespace detail

/// Cluster purity (percent) of each representation, averaged over
/// `cfg.runs` seeds (base_seed + run index). `random` assigns clusters
/// uniformly at random; the others run k-means with k = cfg.k. A failing
/// document provider marks its rows with an error and the rest proceed.
inline EvalReport run_eval(const EvalConfig& cfg, const LabeledCorpus& lc,
                           const EmbeddingProvider* doc_provider = nullptr) {
    if (cfg.runs < 1) throw PreconditionError("run_eval: runs must be >= 1");
    if (lc.documents.empty()) throw PreconditionError("run_eval: empty labeled corpus");
    std::size_t classes_present = 0;
    for (const auto& [k, n] : lc.class_counts) classes_present += n > 0;
    if (cfg.k != classes_present)
        throw PreconditionError("run_eval: k=" + std::to_string(cfg.k) + " but " + std::to_string(classes_present) +
                                " classes are present");

    EvalReport report;
    report.documents = lc.documents.size();
    report.class_counts = lc.class_counts;

    std::vector<Condition> conditions{Condition::keywords_present};
    if (cfg.remove_keywords) conditions.push_back(Condition::keywords_removed);

    for (auto cond : conditions) {
        std::vector<std::string> plain, encoder_input;
        for (const auto& d : lc.documents) {
            std::string title = d.title, abstract = d.abstract;
            if (cond == Condition::keywords_removed) {
                auto t = strip_keywords(title, cfg.keywords);
                auto a = strip_keywords(abstract, cfg.keywords);
                report.emptied_texts += (t.emptied && a.emptied) ? 1 : 0;
                title = std::move(t.text);
                abstract = std::move(a.text);
            }
            plain.push_back(title + " " + abstract);
            encoder_input.push_back(title + " [SEP] " + abstract);
        }

        for (auto rep : cfg.representations) {
            EvalRow row{rep, cond, {}, {}, 0.0, std::nullopt};
            try {
                std::optional<Matrix> points;
                if (rep == Representation::tfidf) {
                    points = detail::tfidf_matrix(plain, cfg.tfidf_max_features);
                } else if (rep == Representation::document_embedding) {
                    if (!doc_provider) throw RetryableError("no document provider configured");
                    points = Matrix::from_rows(embed_texts(*doc_provider, encoder_input));
                }
                for (std::size_t r = 0; r < cfg.runs; ++r) {
                    const std::uint64_t seed = cfg.base_seed + r;
                    std::vector<std::uint32_t> assign;
                    if (!points) {
                        assign = detail::random_assignment(lc.documents.size(), cfg.k, seed);
                    } else {
                        assign = kmeans(*points, {.k = cfg.k, .max_iters = 100, .tol = 1e-4, .seed = seed,
                                                  .n_init = cfg.n_init})
                                     .assignments;
                    }
                    row.seeds.push_back(seed);
                    row.purities.push_back(100.0 * purity(assign, lc.labels));
                }
                double sum = 0.0;
                for (double p : row.purities) sum += p;
                row.mean = sum / static_cast<double>(row.purities.size());
            } catch (const Error& e) {
                row.error = e.what();
                row.seeds.clear();
                row.purities.clear();
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// Human-readable table: one line per representation, one column per
/// keyword condition.
inline std::string format_table(const EvalReport& r) {
    std::ostringstream os;
    os << "documents: " << r.documents << "  classes: " << r.class_counts.size() << "\n";
    std::vector<Representation> reps;
    std::vector<Condition> conds;
    for (const auto& row : r.rows) {
        if (std::find(reps.begin(), reps.end(), row.representation) == reps.end()) reps.push_back(row.representation);
        if (std::find(conds.begin(), conds.end(), row.condition) == conds.end()) conds.push_back(row.condition);
    }
    char line[128];
    std::snprintf(line, sizeof line, "%-10s", "");
    os << line;
    for (auto c : conds) {
        std::snprintf(line, sizeof line, " %18s", c == Condition::keywords_present ? "Keywords Present" : "Keywords Removed");
        os << line;
    }
    os << "\n";
    for (auto rep : reps) {
        std::snprintf(line, sizeof line, "%-10s", to_string(rep).c_str());
        os << line;
        for (auto c : conds) {
            const auto* row = r.find(rep, c);
            const std::string cell = !row ? "-" : row->error ? "error" : fmt2(row->mean);
            std::snprintf(line, sizeof line, " %18s", cell.c_str());
            os << line;
        }
        os << "\n";
    }
    for (const auto& row : r.rows)
        if (row.error) os << to_string(row.representation) << "/" << to_string(row.condition) << ": " << *row.error << "\n";
    return os.str();
}

/// representation,condition,mean_purity_percent,run_purities_percent,seeds,status
inline std::string to_csv(const EvalReport& r) {
    std::ostringstream os;
    os << "representation,condition,mean_purity_percent,run_purities_percent,seeds,status\n";
    for (const auto& row : r.rows) {
        std::string runs, seeds;
        for (std::size_t i = 0; i < row.purities.size(); ++i) {
            runs += (i ? ";" : "") + fmt2(row.purities[i]);
            seeds += (i ? ";" : "") + std::to_string(row.seeds[i]);
        }
        os << to_string(row.representation) << ',' << to_string(row.condition) << ','
           << (row.error ? "" : fmt2(row.mean)) << ',' << runs << ',' << seeds << ','
           << (row.error ? "error" : "ok") << '\n';
    }
    return os.str();
}

}  // namespace facet::eval
