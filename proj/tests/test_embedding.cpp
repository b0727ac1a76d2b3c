#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "facet/embedding.hpp"
#include "facet/http_provider.hpp"
#include "test_util.hpp"

using namespace facet;
using facet::testing::cosine;
using facet::testing::TempDir;

TEST(FallbackEncode, Deterministic) {
    const auto a = fallback_encode("Lithium cobalt oxide cathodes degrade at high voltage.", 128);
    const auto b = fallback_encode("Lithium cobalt oxide cathodes degrade at high voltage.", 128);
    ASSERT_EQ(a.size(), 128u);
    EXPECT_EQ(a, b);
}

TEST(FallbackEncode, UnitNorm) {
    for (std::size_t d : {16, 64, 384})
        for (const char* t : {"x", "ab", "battery cathode", "A much longer sentence about perovskite solar cells."}) {
            const auto v = fallback_encode(t, d);
            double n2 = 0;
            for (float x : v) n2 += double(x) * x;
            EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-6) << t << " d=" << d;
        }
}

TEST(FallbackEncode, DimensionPrecondition) {
    EXPECT_THROW(fallback_encode("text", 8), PreconditionError);
    EXPECT_THROW(FallbackProvider(EmbeddingKind::sentence, 15), PreconditionError);
    EXPECT_THROW(fallback_encode("   ", 64), PreconditionError);
}

TEST(FallbackEncode, RelatedPairCloserThanUnrelated) {
    for (std::size_t d : {64, 384}) {
        const auto a = fallback_encode("battery cathode", d);
        const auto b = fallback_encode("battery anode", d);
        const auto c = fallback_encode("orchestra violin", d);
        EXPECT_GT(cosine(a, b), cosine(a, c)) << d;
    }
}

// Frozen values guard against accidental changes to the hashing or the seed.
TEST(FallbackEncode, RegressionCosines) {
    const auto a = fallback_encode("battery cathode", 64);
    const auto b = fallback_encode("battery anode", 64);
    const auto c = fallback_encode("orchestra violin", 64);
    EXPECT_NEAR(dot(a, b), 0.661041737, 1e-6);
    EXPECT_NEAR(dot(a, c), 0.141818210, 1e-6);
    EXPECT_NEAR(a[0], 0.038720153, 1e-7);

    const auto a3 = fallback_encode("battery cathode", 384);
    const auto b3 = fallback_encode("battery anode", 384);
    const auto c3 = fallback_encode("orchestra violin", 384);
    EXPECT_NEAR(dot(a3, b3), 0.573967218, 1e-6);
    EXPECT_NEAR(dot(a3, c3), -0.040451162, 1e-6);
}

TEST(FallbackEncode, SharedTokensBeatDisjoint) {
    // Ten tokens; the second text shares eight of them with the first.
    const std::string base = "spinel cathode coating suppresses manganese dissolution during extended cycling tests today";
    const std::string similar = "spinel cathode coating suppresses manganese dissolution during extended heating runs";
    const std::string disjoint = "orchestral violin tuning remains stable across humid concert halls every season";
    FallbackProvider p(EmbeddingKind::document, 128);
    const auto v0 = embed_document(make_document("a", "Coatings", base), p);
    const auto v1 = embed_document(make_document("b", "Coatings", similar), p);
    const auto v2 = embed_document(make_document("c", "Music", disjoint), p);
    EXPECT_GT(cosine(v0, v1), cosine(v0, v2));
    EXPECT_GT(cosine(v0, v1), 0.5);
}

TEST(EmbedDocument, UsesTitleSepAbstract) {
    FallbackProvider p(EmbeddingKind::document, 64);
    const auto d = make_document("p", "Thin films", "They are grown by sputtering.");
    EXPECT_EQ(document_text(d), "Thin films [SEP] They are grown by sputtering.");
    EXPECT_EQ(embed_document(d, p), fallback_encode("Thin films [SEP] They are grown by sputtering.", 64));
}

TEST(EmbedDocument, KindMismatchRejected) {
    FallbackProvider sent(EmbeddingKind::sentence, 64);
    FallbackProvider doc(EmbeddingKind::document, 64);
    const auto d = make_document("p", "T", "Some sentence.");
    EXPECT_THROW(embed_document(d, sent), PreconditionError);
    EXPECT_THROW(embed_sentence(d.sentences[0], doc), PreconditionError);
}

TEST(EmbedSentence, IdenticalTextIdenticalVector) {
    FallbackProvider p(EmbeddingKind::sentence, 64);
    const auto a = make_document("a", "T", "Graphene is strong. It bends.");
    const auto b = make_document("b", "U", "Graphene is strong. Nothing else.");
    EXPECT_EQ(embed_sentence(a.sentences[0], p), embed_sentence(b.sentences[0], p));
}

TEST(EmbedSentence, EmptyTextRejected) {
    FallbackProvider p(EmbeddingKind::sentence, 64);
    Sentence s{"a", 0, "   "};
    EXPECT_THROW(embed_sentence(s, p), PreconditionError);
}

TEST(EmbedSentence, BatchEqualsLoop) {
    FallbackProvider p(EmbeddingKind::sentence, 96);
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back("Sentence number " + std::to_string(i) + " about oxide layers.");
    const auto batch = embed_sentences(texts, p);
    ASSERT_EQ(batch.size(), texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i)
        EXPECT_EQ(batch[i], embed_sentence(Sentence{"d", static_cast<std::uint32_t>(i), texts[i]}, p));
}

TEST(EmbeddingCache, SaveLoadRoundTrip) {
    TempDir tmp;
    FallbackProvider p(EmbeddingKind::sentence, 32);
    EmbeddingCache cache(p.name(), p.dimension());
    std::vector<std::string> texts = {"alpha beta", "gamma delta", "epsilon"};
    const auto first = embed_cached(p, texts, &cache);
    EXPECT_EQ(cache.size(), 3u);
    cache.save(tmp.file("c.emb"));

    const auto loaded = EmbeddingCache::load(tmp.file("c.emb"));
    EXPECT_EQ(loaded.provider(), p.name());
    EXPECT_EQ(loaded.dimension(), 32u);
    EXPECT_EQ(loaded.size(), 3u);
    for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(*loaded.lookup(texts[i]), first[i]);

    loaded.save(tmp.file("c2.emb"));
    EXPECT_EQ(facet::testing::read_file(tmp.file("c.emb")), facet::testing::read_file(tmp.file("c2.emb")));
}

TEST(EmbeddingCache, HitsSkipTheProvider) {
    struct Counting final : EmbeddingProvider {
        mutable std::size_t calls = 0;
        FallbackProvider inner{EmbeddingKind::sentence, 32};
        std::string name() const override { return inner.name(); }
        std::size_t dimension() const override { return 32; }
        EmbeddingKind kind() const override { return EmbeddingKind::sentence; }
        std::vector<Vector> embed_batch(std::span<const std::string> t) const override {
            calls += t.size();
            return inner.embed_batch(t);
        }
    } p;
    EmbeddingCache cache(p.name(), 32);
    std::vector<std::string> texts = {"one text", "two text"};
    embed_cached(p, texts, &cache);
    texts.push_back("three text");
    embed_cached(p, texts, &cache);
    EXPECT_EQ(p.calls, 3u);
}

TEST(EmbeddingCache, WrongProviderRejected) {
    FallbackProvider p(EmbeddingKind::sentence, 32);
    EmbeddingCache cache("other", 32);
    std::vector<std::string> texts = {"x y z"};
    EXPECT_THROW(embed_cached(p, texts, &cache), PreconditionError);
}

TEST(EmbeddingCache, CorruptFileRejected) {
    TempDir tmp;
    facet::testing::write_file(tmp.file("bad.emb"), "NOTACACHE");
    EXPECT_THROW(EmbeddingCache::load(tmp.file("bad.emb")), FormatError);
    EXPECT_THROW(EmbeddingCache::load(tmp.file("missing.emb")), IoError);
}

TEST(EmbedTexts, ContractViolationsAreFatal) {
    struct Broken final : EmbeddingProvider {
        int mode = 0;
        std::string name() const override { return "broken"; }
        std::size_t dimension() const override { return 4; }
        EmbeddingKind kind() const override { return EmbeddingKind::sentence; }
        std::vector<Vector> embed_batch(std::span<const std::string> t) const override {
            if (mode == 0) return std::vector<Vector>(t.size(), Vector(3, 1.0f));
            if (mode == 1) return std::vector<Vector>(t.size(), Vector(4, 0.0f));
            return {};
        }
    } p;
    std::vector<std::string> texts = {"abc"};
    for (int mode : {0, 1, 2}) {
        p.mode = mode;
        EXPECT_THROW(embed_texts(p, texts), ContractError) << mode;
    }
}

namespace {

// Minimal encoder service speaking the provider protocol.
class MockEncoder {
public:
    explicit MockEncoder(std::size_t reported_dim, int status = 200) {
        srv_.Post("/embed", [=](const httplib::Request& req, httplib::Response& res) {
            if (status != 200) {
                res.status = status;
                return;
            }
            const auto j = nlohmann::json::parse(req.body);
            nlohmann::json vectors = nlohmann::json::array();
            for (const auto& t : j.at("texts")) vectors.push_back(fallback_encode(t.get<std::string>(), reported_dim));
            res.set_content(nlohmann::json{{"vectors", vectors}, {"dimension", reported_dim}}.dump(),
                            "application/json");
        });
        port_ = srv_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { srv_.listen_after_bind(); });
        srv_.wait_until_ready();
    }
    ~MockEncoder() {
        srv_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }

private:
    httplib::Server srv_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST(HttpProvider, MatchesServiceVectors) {
    MockEncoder enc(32);
    HttpProvider p(enc.url(), EmbeddingKind::sentence, 32);
    std::vector<std::string> texts = {"first sentence", "second sentence"};
    const auto v = embed_sentences(texts, p);
    ASSERT_EQ(v.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 32; ++k) EXPECT_NEAR(v[i][k], fallback_encode(texts[i], 32)[k], 1e-5);
}

TEST(HttpProvider, DimensionMismatchIsContractError) {
    MockEncoder enc(48);
    HttpProvider p(enc.url(), EmbeddingKind::sentence, 32);
    std::vector<std::string> texts = {"hello world"};
    EXPECT_THROW(embed_sentences(texts, p), ContractError);
}

TEST(HttpProvider, ServerErrorIsRetryable) {
    MockEncoder enc(32, 503);
    HttpProvider p(enc.url(), EmbeddingKind::sentence, 32);
    std::vector<std::string> texts = {"hello world"};
    EXPECT_THROW(embed_sentences(texts, p), RetryableError);
}

TEST(HttpProvider, UnreachableIsRetryable) {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    HttpProvider p("http://127.0.0.1:" + std::to_string(port) + "/embed", EmbeddingKind::document, 32);
    const auto d = make_document("a", "T", "Some text.");
    EXPECT_THROW(embed_document(d, p), RetryableError);
}

TEST(MakeProvider, ParsesSpecs) {
    EXPECT_EQ(make_provider("fallback", EmbeddingKind::sentence, 64)->name(), "fallback-ngram");
    EXPECT_EQ(make_provider("http:http://localhost:1/x", EmbeddingKind::sentence, 64)->name(),
              "http:http://localhost:1/x");
    EXPECT_THROW(make_provider("bert", EmbeddingKind::sentence, 64), PreconditionError);
}
