#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "facet/corpus.hpp"
#include "facet/kmeans.hpp"

// Deterministic synthetic corpora for demos and tests. Words are made of
// random syllables so that topics share no vocabulary unless asked to.
namespace facet::synthetic {

class WordSource {
public:
    explicit WordSource(std::uint64_t seed) : rng_(seed) {}

    std::string word() {
        static constexpr const char* syll[] = {"ka", "lo", "mi", "ren", "tu", "sa", "vor", "pel", "qui", "dan",
                                               "zo", "fi", "mar", "nu", "gel", "tor", "bi", "shu", "lan", "ex",
                                               "ol", "tri", "cam", "ves", "po", "rul", "dix", "ha", "jen", "wo"};
        constexpr std::size_t n = std::size(syll);
        while (true) {
            std::string w;
            const std::size_t parts = 2 + pick(3);
            for (std::size_t i = 0; i < parts; ++i) w += syll[pick(n)];
            if (used_.insert(w).second && !text::is_stopword(w)) return w;
        }
    }

    std::vector<std::string> words(std::size_t n) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(word());
        return out;
    }

    std::size_t pick(std::size_t n) { return facet::detail::uniform_index(rng_, n); }
    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
    std::set<std::string> used_;
};

inline std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

struct TopicCorpusConfig {
    std::size_t documents = 2000;
    std::size_t topics = 20;
    std::size_t topic_vocabulary = 40;
    std::size_t shared_vocabulary = 60;
    std::size_t min_sentences = 3;
    std::size_t max_sentences = 6;
    std::size_t words_per_sentence = 8;
    double shared_share = 0.3;  // fraction of sentence words drawn from the shared vocabulary
    std::uint64_t seed = 1;
};

/// Documents spread round-robin over topics; each sentence mixes topic words
/// with a shared vocabulary. keywords = {"topic-<t>"}.
inline std::vector<Document> topic_documents(const TopicCorpusConfig& cfg) {
    WordSource ws(cfg.seed);
    std::vector<std::vector<std::string>> topic_words;
    for (std::size_t t = 0; t < cfg.topics; ++t) topic_words.push_back(ws.words(cfg.topic_vocabulary));
    const auto shared = ws.words(cfg.shared_vocabulary);

    auto sentence = [&](std::size_t t) {
        std::string s;
        for (std::size_t w = 0; w < cfg.words_per_sentence; ++w) {
            const bool use_shared = facet::detail::unit_real(ws.rng()) < cfg.shared_share;
            const auto& pool = use_shared ? shared : topic_words[t];
            s += (w ? " " : "") + pool[ws.pick(pool.size())];
        }
        return capitalize(s) + ".";
    };

    std::vector<Document> docs;
    for (std::size_t i = 0; i < cfg.documents; ++i) {
        const std::size_t t = i % cfg.topics;
        const std::size_t ns = cfg.min_sentences + ws.pick(cfg.max_sentences - cfg.min_sentences + 1);
        std::string abstract;
        for (std::size_t k = 0; k < ns; ++k) abstract += (k ? " " : "") + sentence(t);
        std::string title = capitalize(topic_words[t][ws.pick(cfg.topic_vocabulary)]) + " " +
                            topic_words[t][ws.pick(cfg.topic_vocabulary)] + " " + shared[ws.pick(shared.size())];
        char id[32];
        std::snprintf(id, sizeof id, "P%06zu", i);
        docs.push_back(make_document(id, title, abstract, {"topic-" + std::to_string(t)}));
    }
    return docs;
}

inline Corpus topic_corpus(const TopicCorpusConfig& cfg) { return Corpus::from_documents(topic_documents(cfg)); }

struct PlantedEvalConfig {
    std::vector<std::string> keywords;  // one class per keyword
    std::size_t docs_per_class = 100;
    std::size_t noise_vocabulary = 300;
    std::size_t sentences = 4;
    std::size_t words_per_sentence = 10;
    std::size_t keyword_mentions = 3;  // in the abstract; the title always carries one more
    std::uint64_t seed = 7;
};

/// Documents whose only class signal is the class keyword: all other words
/// come from one class-independent noise vocabulary. Stripping the keywords
/// leaves nothing that separates the classes.
inline std::vector<Document> planted_eval_documents(const PlantedEvalConfig& cfg) {
    WordSource ws(cfg.seed);
    const auto noise = ws.words(cfg.noise_vocabulary);
    std::vector<Document> docs;
    std::size_t id = 0;
    for (std::size_t i = 0; i < cfg.docs_per_class; ++i) {
        for (const auto& kw : cfg.keywords) {
            std::vector<std::string> sentences(cfg.sentences);
            for (auto& s : sentences)
                for (std::size_t w = 0; w < cfg.words_per_sentence; ++w)
                    s += (w ? " " : "") + noise[ws.pick(noise.size())];
            for (std::size_t m = 0; m < cfg.keyword_mentions; ++m) {
                auto& s = sentences[ws.pick(sentences.size())];
                s += " " + kw;
            }
            std::string abstract;
            for (std::size_t k = 0; k < sentences.size(); ++k) abstract += (k ? " " : "") + capitalize(sentences[k]) + ".";
            const std::string title = capitalize(noise[ws.pick(noise.size())]) + " of " + kw + " " +
                                      noise[ws.pick(noise.size())];
            char pid[32];
            std::snprintf(pid, sizeof pid, "E%06zu", id++);
            docs.push_back(make_document(pid, title, abstract, {kw}));
        }
    }
    return docs;
}

}  // namespace facet::synthetic
