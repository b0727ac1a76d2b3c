#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "facet/common.hpp"
#include "facet/text.hpp"

namespace facet {

inline constexpr std::string_view kCorpusFormat = "facet-corpus";
inline constexpr int kCorpusVersion = 1;
inline constexpr std::size_t kMinSentenceChars = 3;

struct Sentence {
    std::string doc_id;
    std::size_t position = 0;
    std::string text;

    friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Document {
    std::string paper_id;
    std::string title;
    std::string abstract;
    std::vector<Sentence> sentences;
    std::vector<std::string> keywords;

    friend bool operator==(const Document&, const Document&) = default;
};

/// Address of one sentence in the corpus. Ordering is (doc_id, position),
/// which is also the tie-break order for equal retrieval scores.
struct SentenceRef {
    std::string doc_id;
    std::uint32_t position = 0;

    friend bool operator==(const SentenceRef&, const SentenceRef&) = default;
    friend auto operator<=>(const SentenceRef&, const SentenceRef&) = default;
};

// ---------------------------------------------------------------------------
// Sentence splitting
// ---------------------------------------------------------------------------

namespace detail {

inline const std::unordered_set<std::string>& abbreviations() {
    // Lowercased, including the trailing period.
    static const std::unordered_set<std::string> list = {
        "fig.",  "figs.", "al.",   "e.g.", "i.e.", "vs.",  "dr.",  "no.",  "nos.", "eq.",   "eqs.",
        "ref.",  "refs.", "sec.",  "tab.", "cf.",  "ca.",  "approx.", "mr.", "ms.", "prof.", "st.",
        "resp.", "etc.",  "vol.",  "ch.",  "pp.",  "viz.", "inc.", "ltd.", "co.",  "jr.",   "sr.",
    };
    return list;
}

struct Span {
    std::size_t begin;
    std::size_t end;
};

inline Span trim_span(std::string_view s, Span sp) {
    while (sp.begin < sp.end && text::is_space(s[sp.begin])) ++sp.begin;
    while (sp.end > sp.begin && text::is_space(s[sp.end - 1])) --sp.end;
    return sp;
}

inline bool is_fragment(std::string_view s, Span sp) {
    const auto piece = s.substr(sp.begin, sp.end - sp.begin);
    return piece.size() < kMinSentenceChars || !text::has_alpha(piece);
}

inline bool ends_with_abbreviation(std::string_view s, std::size_t punct_pos) {
    std::size_t b = punct_pos;
    while (b > 0 && !text::is_space(s[b - 1])) --b;
    auto word = text::to_lower(s.substr(b, punct_pos - b + 1));
    // Strip leading brackets/quotes: "(Fig." should still count.
    while (!word.empty() && !text::is_alnum(word.front())) word.erase(word.begin());
    return abbreviations().contains(word);
}

inline std::vector<Span> sentence_spans(std::string_view s) {
    std::vector<Span> raw;
    std::size_t start = 0;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const char c = s[i];
        if (c != '.' && c != '!' && c != '?') continue;
        if (!text::is_space(s[i + 1])) continue;
        std::size_t j = i + 1;
        while (j < n && text::is_space(s[j])) ++j;
        if (j == n) break;
        if (!text::is_upper(s[j]) && !text::is_digit(s[j])) continue;
        if (c == '.' && ends_with_abbreviation(s, i)) continue;
        raw.push_back({start, i + 1});
        start = j;
    }
    raw.push_back({start, n});

    std::vector<Span> merged;
    for (auto sp : raw) {
        sp = trim_span(s, sp);
        if (sp.begin == sp.end) continue;
        if (!merged.empty() && is_fragment(s, sp))
            merged.back().end = sp.end;
        else
            merged.push_back(sp);
    }
    if (merged.size() > 1 && is_fragment(s, merged.front())) {
        merged[1].begin = merged[0].begin;
        merged.erase(merged.begin());
    }
    return merged;
}

}  // namespace detail

/// Rule-based sentence splitter for abstracts.
///
/// A boundary is placed after '.', '!' or '?' when followed by whitespace and
/// then an uppercase letter or digit, unless the period closes a known
/// abbreviation ("Fig.", "et al.", "e.g.", ...). Fragments shorter than three
/// trimmed characters, or without any letter, are merged into the preceding
/// sentence (the following one if they lead the abstract). Returned texts are
/// trimmed substrings of the input.
inline std::vector<std::string> split_sentences(std::string_view abstract) {
    const auto trimmed = text::trim(abstract);
    if (trimmed.empty()) throw PreconditionError("split_sentences: abstract is empty");
    if (!text::has_alpha(trimmed))
        throw PreconditionError("split_sentences: abstract has no alphabetic content");
    std::vector<std::string> out;
    for (const auto& sp : detail::sentence_spans(abstract))
        out.emplace_back(abstract.substr(sp.begin, sp.end - sp.begin));
    return out;
}

// ---------------------------------------------------------------------------
// Documents and the corpus
// ---------------------------------------------------------------------------

inline std::string without_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
        if (!text::is_space(c)) out.push_back(c);
    return out;
}

/// Returns an empty string when `doc` satisfies every Document invariant,
/// otherwise a short reason.
inline std::string validate(const Document& doc) {
    if (text::trim(doc.paper_id).empty()) return "empty paper_id";
    if (text::trim(doc.title).empty()) return "empty title";
    if (text::trim(doc.abstract).empty()) return "empty abstract";
    if (doc.sentences.empty()) return "no sentences";
    std::string joined;
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
        const auto& s = doc.sentences[i];
        if (s.doc_id != doc.paper_id) return "sentence doc_id mismatch";
        if (s.position != i) return "sentence position out of order";
        const auto t = text::trim(s.text);
        if (t.size() < kMinSentenceChars) return "sentence shorter than 3 characters";
        if (!text::has_alpha(t)) return "sentence without alphabetic token";
        joined += s.text;
    }
    if (without_whitespace(joined) != without_whitespace(doc.abstract))
        return "sentences do not reconstruct the abstract";
    return {};
}

inline Document make_document(std::string paper_id, std::string title, std::string abstract,
                              std::vector<std::string> keywords = {}) {
    Document d{std::move(paper_id), std::move(title), std::move(abstract), {}, std::move(keywords)};
    std::size_t pos = 0;
    for (auto& s : split_sentences(d.abstract)) d.sentences.push_back({d.paper_id, pos++, std::move(s)});
    return d;
}

/// Hash of the whitespace-normalized abstract; identifies a query abstract
/// that already lives in the corpus.
inline std::uint64_t abstract_hash(std::string_view abstract) {
    return fnv1a64(text::collapse_whitespace(abstract));
}

struct CorpusStats {
    std::size_t document_count = 0;
    std::size_t sentence_count = 0;
    std::size_t skipped = 0;

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// Immutable set of validated documents. Built once by ingest() (or
/// from_documents()) and then only read.
class Corpus {
public:
    Corpus() = default;

    static Corpus from_documents(std::vector<Document> docs, std::string source_path = {},
                                 std::size_t skipped = 0) {
        Corpus c;
        c.source_path_ = std::move(source_path);
        c.stats_.skipped = skipped;
        for (auto& d : docs) {
            if (auto why = validate(d); !why.empty())
                throw PreconditionError("invalid document '" + d.paper_id + "': " + why);
            if (c.by_id_.contains(d.paper_id))
                throw PreconditionError("duplicate paper_id '" + d.paper_id + "'");
            c.by_id_.emplace(d.paper_id, c.docs_.size());
            c.stats_.sentence_count += d.sentences.size();
            c.docs_.push_back(std::move(d));
        }
        if (c.docs_.empty()) throw PreconditionError("corpus is empty");
        c.stats_.document_count = c.docs_.size();
        return c;
    }

    const std::vector<Document>& documents() const noexcept { return docs_; }
    const CorpusStats& stats() const noexcept { return stats_; }
    const std::string& source_path() const noexcept { return source_path_; }
    std::size_t size() const noexcept { return docs_.size(); }

    const Document* find(std::string_view paper_id) const {
        auto it = by_id_.find(std::string(paper_id));
        return it == by_id_.end() ? nullptr : &docs_[it->second];
    }
    std::optional<std::size_t> index_of(std::string_view paper_id) const {
        auto it = by_id_.find(std::string(paper_id));
        if (it == by_id_.end()) return std::nullopt;
        return it->second;
    }

    const Sentence& sentence(const SentenceRef& ref) const {
        const auto* d = find(ref.doc_id);
        if (!d || ref.position >= d->sentences.size())
            throw PreconditionError("unknown sentence " + ref.doc_id + "#" + std::to_string(ref.position));
        return d->sentences[ref.position];
    }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::string source_path_;
    CorpusStats stats_;
};

// ---------------------------------------------------------------------------
// Line-delimited JSON I/O
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<Document> parse_record(const nlohmann::json& j) {
    if (!j.is_object()) return std::nullopt;
    auto str_field = [&](const char* key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) return std::nullopt;
        return it->get<std::string>();
    };
    auto id = str_field("paper_id");
    auto title = str_field("title");
    auto abstract = str_field("abstract");
    if (!id || !title || !abstract) return std::nullopt;

    Document d{*id, *title, *abstract, {}, {}};
    if (auto it = j.find("keywords"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) return std::nullopt;
        for (const auto& k : *it) {
            if (!k.is_string()) return std::nullopt;
            d.keywords.push_back(k.get<std::string>());
        }
    }
    if (auto it = j.find("sentences"); it != j.end()) {
        // Stored boundaries from a serialized corpus are reused verbatim.
        if (!it->is_array()) return std::nullopt;
        std::size_t pos = 0;
        for (const auto& s : *it) {
            if (!s.is_string()) return std::nullopt;
            d.sentences.push_back({d.paper_id, pos++, s.get<std::string>()});
        }
    } else {
        try {
            std::size_t pos = 0;
            for (auto& s : split_sentences(d.abstract)) d.sentences.push_back({d.paper_id, pos++, std::move(s)});
        } catch (const PreconditionError&) {
            return std::nullopt;
        }
    }
    if (!validate(d).empty()) return std::nullopt;
    return d;
}

}  // namespace detail

/// Reads line-delimited JSON records {paper_id, title, abstract, keywords?}.
/// Invalid records and repeated paper_ids (first one wins) are skipped and
/// counted in stats().skipped. A format header line, as written by
/// save_corpus(), is recognised and ignored.
inline Corpus ingest(const std::string& path, std::optional<std::size_t> max_docs = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read corpus input: " + path);

    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    std::size_t skipped = 0;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (max_docs && docs.size() >= *max_docs) break;
        if (text::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (first && j.is_object() && j.contains("format")) {
            first = false;
            if (j["format"] != kCorpusFormat) throw FormatError("unknown corpus format in " + path);
            if (j.value("version", 0) != kCorpusVersion)
                throw FormatError("unsupported corpus version in " + path);
            continue;
        }
        first = false;
        auto doc = j.is_discarded() ? std::nullopt : detail::parse_record(j);
        if (!doc || seen.contains(doc->paper_id)) {
            ++skipped;
            continue;
        }
        seen.insert(doc->paper_id);
        docs.push_back(std::move(*doc));
    }
    if (in.bad()) throw IoError("read error on " + path);
    if (docs.empty()) throw Error("empty corpus: no valid documents in " + path);
    return Corpus::from_documents(std::move(docs), path, skipped);
}

inline nlohmann::json to_json(const Document& d) {
    nlohmann::json sentences = nlohmann::json::array();
    for (const auto& s : d.sentences) sentences.push_back(s.text);
    return {{"paper_id", d.paper_id},
            {"title", d.title},
            {"abstract", d.abstract},
            {"keywords", d.keywords},
            {"sentences", std::move(sentences)}};
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write corpus: " + path);
    const nlohmann::json header = {{"format", kCorpusFormat},
                                   {"version", kCorpusVersion},
                                   {"documents", corpus.stats().document_count},
                                   {"sentences", corpus.stats().sentence_count}};
    out << header.dump() << '\n';
    for (const auto& d : corpus.documents()) out << to_json(d).dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace facet
