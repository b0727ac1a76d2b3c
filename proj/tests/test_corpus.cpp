#include <gtest/gtest.h>

#include <json.hpp>

#include "facet/corpus.hpp"
#include "facet/synthetic.hpp"
#include "test_util.hpp"

using namespace facet;
using facet::testing::TempDir;
using facet::testing::write_file;

namespace {

std::string record(const std::string& id, const std::string& title, const std::string& abstract) {
    return nlohmann::json{{"paper_id", id}, {"title", title}, {"abstract", abstract}}.dump() + "\n";
}

std::string strip_ws(const std::string& s) {
    std::string out;
    for (char c : s)
        if (!text::is_space(c)) out += c;
    return out;
}

}  // namespace

TEST(SplitSentences, ThreePlainSentences) {
    const auto s = split_sentences("We grow films. They are thin. Results are good.");
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0], "We grow films.");
    EXPECT_EQ(s[1], "They are thin.");
    EXPECT_EQ(s[2], "Results are good.");
}

TEST(SplitSentences, NoTerminalPeriodIsOneSentence) {
    const auto s = split_sentences("a study of graphene oxide membranes");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], "a study of graphene oxide membranes");
}

TEST(SplitSentences, AbbreviationDoesNotSplit) {
    const auto s = split_sentences("Fig. 3 shows results. We conclude.");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0], "Fig. 3 shows results.");
    EXPECT_EQ(s[1], "We conclude.");
}

TEST(SplitSentences, QuestionAndExclamationMarks) {
    const auto s = split_sentences("Does it work? Yes! It does.");
    EXPECT_EQ(s.size(), 3u);
}

TEST(SplitSentences, DecimalNumbersStayInside) {
    const auto s = split_sentences("The gap is 1.5 eV at room temperature. It shrinks when heated.");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0], "The gap is 1.5 eV at room temperature.");
}

TEST(SplitSentences, ShortFragmentsMerge) {
    for (const auto& t : split_sentences("Phase A. b. The rest follows here. 1. Done now."))
        EXPECT_GE(text::trim(t).size(), kMinSentenceChars) << t;
}

TEST(SplitSentences, EmptyOrNonAlphaRejected) {
    EXPECT_THROW(split_sentences(""), PreconditionError);
    EXPECT_THROW(split_sentences("   \n\t "), PreconditionError);
    EXPECT_THROW(split_sentences("12. 34! 56?"), PreconditionError);
}

TEST(SplitSentences, ConcatenationReconstructsAbstract) {
    synthetic::TopicCorpusConfig cfg;
    cfg.documents = 200;
    for (const auto& d : synthetic::topic_documents(cfg)) {
        std::string joined;
        for (const auto& s : split_sentences(d.abstract)) joined += s;
        EXPECT_EQ(strip_ws(joined), strip_ws(d.abstract));
    }
}

TEST(SplitSentences, Idempotent) {
    const std::vector<std::string> inputs = {
        "Fig. 3 shows results. We conclude.",
        "We grow films. They are thin. Results are good.",
        "Measured at 300 K, e.g. in vacuum. The data agree with theory et al. predicted.",
        "no period here",
    };
    for (const auto& in : inputs)
        for (const auto& s : split_sentences(in)) {
            const auto again = split_sentences(s);
            ASSERT_EQ(again.size(), 1u) << s;
            EXPECT_EQ(again[0], s);
        }
}

TEST(Document, MakeDocumentSatisfiesInvariants) {
    const auto d = make_document("p1", "Title", "First sentence here. Second one.", {"alloys"});
    EXPECT_EQ(validate(d), "");
    ASSERT_EQ(d.sentences.size(), 2u);
    EXPECT_EQ(d.sentences[1].doc_id, "p1");
    EXPECT_EQ(d.sentences[1].position, 1u);
}

TEST(Document, ValidateCatchesBrokenSentences) {
    auto d = make_document("p1", "Title", "First sentence here. Second one.");
    d.sentences[1].position = 5;
    EXPECT_NE(validate(d), "");
    d = make_document("p1", "Title", "First sentence here. Second one.");
    d.sentences[0].text = "Something else entirely.";
    EXPECT_NE(validate(d), "");
    d = make_document("p1", " ", "First sentence here.");
    EXPECT_NE(validate(d), "");
}

TEST(Corpus, FromDocumentsRejectsDuplicates) {
    std::vector<Document> docs = {make_document("a", "T", "Some text here."), make_document("a", "U", "Other text.")};
    EXPECT_THROW(Corpus::from_documents(docs), PreconditionError);
}

TEST(Corpus, LookupAndSentenceAccess) {
    auto c = Corpus::from_documents({make_document("a", "T", "One thing. Two things."), make_document("b", "U", "Three.")});
    EXPECT_EQ(c.size(), 2u);
    EXPECT_EQ(*c.index_of("b"), 1u);
    EXPECT_EQ(c.find("zz"), nullptr);
    EXPECT_EQ(c.sentence({"a", 1}).text, "Two things.");
    EXPECT_THROW(c.sentence({"a", 2}), PreconditionError);
}

TEST(Ingest, SkipsInvalidAndDuplicateRecords) {
    TempDir tmp;
    std::string body;
    body += record("p1", "Graphene", "Graphene is strong. It conducts well.");
    body += "{not json\n";
    body += record("p2", "", "Missing title makes this invalid.");
    body += R"({"paper_id": "p3", "title": "No abstract"})" "\n";
    body += record("p1", "Dup", "A duplicate id is skipped.");
    body += "\n";
    body += record("p4", "Alloys", "Steel is an alloy.");
    body += record("p5", "Numbers", "123 456.");
    write_file(tmp.file("in.jsonl"), body);

    const auto c = ingest(tmp.file("in.jsonl"));
    EXPECT_EQ(c.stats().document_count, 2u);
    EXPECT_EQ(c.stats().skipped, 5u);
    EXPECT_EQ(c.stats().sentence_count, 3u);
    EXPECT_EQ(c.find("p1")->title, "Graphene");
}

TEST(Ingest, SentenceCountIsSumOverDocuments) {
    synthetic::TopicCorpusConfig cfg;
    cfg.documents = 150;
    const auto c = synthetic::topic_corpus(cfg);
    std::size_t n = 0;
    for (const auto& d : c.documents()) n += d.sentences.size();
    EXPECT_EQ(c.stats().sentence_count, n);
}

TEST(Ingest, MaxDocsLimit) {
    TempDir tmp;
    std::string body;
    for (int i = 0; i < 10; ++i) body += record("p" + std::to_string(i), "T", "Some abstract text.");
    write_file(tmp.file("in.jsonl"), body);
    EXPECT_EQ(ingest(tmp.file("in.jsonl"), 4).size(), 4u);
}

TEST(Ingest, UnreadableFileIsIoError) {
    EXPECT_THROW(ingest("/nonexistent/dir/corpus.jsonl"), IoError);
}

TEST(Ingest, NoValidRecordsIsError) {
    TempDir tmp;
    write_file(tmp.file("in.jsonl"), "{}\n[1,2]\n" + record("x", "", "bad"));
    EXPECT_THROW(ingest(tmp.file("in.jsonl")), Error);
}

TEST(Ingest, SaveAndReingestRoundTrip) {
    TempDir tmp;
    synthetic::TopicCorpusConfig cfg;
    cfg.documents = 60;
    const auto c = synthetic::topic_corpus(cfg);
    save_corpus(c, tmp.file("c.jsonl"));
    const auto back = ingest(tmp.file("c.jsonl"));
    ASSERT_EQ(back.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& a = c.documents()[i];
        const auto& b = back.documents()[i];
        EXPECT_EQ(a.paper_id, b.paper_id);
        EXPECT_EQ(a.title, b.title);
        EXPECT_EQ(a.abstract, b.abstract);
        EXPECT_EQ(a.keywords, b.keywords);
        ASSERT_EQ(a.sentences.size(), b.sentences.size());
        for (std::size_t k = 0; k < a.sentences.size(); ++k) EXPECT_EQ(a.sentences[k].text, b.sentences[k].text);
    }
    save_corpus(back, tmp.file("c2.jsonl"));
    EXPECT_EQ(facet::testing::read_file(tmp.file("c.jsonl")), facet::testing::read_file(tmp.file("c2.jsonl")));
}

TEST(Ingest, UnknownFormatHeaderRejected) {
    TempDir tmp;
    write_file(tmp.file("in.jsonl"), R"({"format":"facet-corpus","version":99})" "\n" + record("a", "T", "Text here."));
    EXPECT_THROW(ingest(tmp.file("in.jsonl")), FormatError);
}
