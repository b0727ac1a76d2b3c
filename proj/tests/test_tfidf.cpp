#include <gtest/gtest.h>

#include <cmath>

#include "facet/tfidf.hpp"

using namespace facet;

TEST(Tokenize, LowercaseSplitAndFilter) {
    EXPECT_EQ(text::tokenize("The Li-ion cell, at 4.2V, is a B!"),
              (std::vector<std::string>{"li", "ion", "cell", "2v"}));
}

TEST(Tfidf, UbiquitousTokenHasUnitIdf) {
    std::vector<std::string> texts = {"oxide layer", "oxide film", "thin oxide coating"};
    const auto m = fit_tfidf(texts);
    EXPECT_DOUBLE_EQ(*m.idf_of("oxide"), 1.0);
    for (double idf : m.idf()) EXPECT_GE(idf, 1.0);
}

TEST(Tfidf, HandComputedIdf) {
    std::vector<std::string> texts = {"cat dog", "dog fish"};
    const auto m = fit_tfidf(texts);
    EXPECT_EQ(m.doc_count(), 2u);
    EXPECT_NEAR(*m.idf_of("cat"), std::log(3.0 / 2.0) + 1.0, 1e-12);
    EXPECT_NEAR(*m.idf_of("cat"), 1.4055, 1e-4);
    EXPECT_DOUBLE_EQ(*m.idf_of("dog"), 1.0);
    EXPECT_FALSE(m.idf_of("bird"));
}

TEST(Tfidf, VocabularyIsDenseAndSorted) {
    std::vector<std::string> texts = {"zeta alpha", "beta gamma alpha"};
    const auto m = fit_tfidf(texts);
    ASSERT_EQ(m.size(), 4u);
    EXPECT_EQ(m.terms(), (std::vector<std::string>{"alpha", "beta", "gamma", "zeta"}));
    for (const auto& [term, idx] : m.vocabulary()) EXPECT_EQ(m.terms().at(idx), term);
}

TEST(Tfidf, DisjointTextGivesZeroVector) {
    std::vector<std::string> texts = {"cat dog", "dog fish"};
    const auto m = fit_tfidf(texts);
    const auto v = m.transform("violin orchestra");
    EXPECT_TRUE(v.is_zero());
    for (float x : v.to_dense(m.size())) EXPECT_EQ(x, 0.0f);
}

TEST(Tfidf, TransformIsNormalizedTfIdf) {
    std::vector<std::string> texts = {"cat dog", "dog fish"};
    const auto m = fit_tfidf(texts);
    const auto v = m.transform("cat cat dog").to_dense(m.size());
    const double c = 2 * (std::log(1.5) + 1.0), d = 1.0;
    const double n = std::sqrt(c * c + d * d);
    EXPECT_NEAR(v[m.vocabulary().at("cat")], c / n, 1e-6);
    EXPECT_NEAR(v[m.vocabulary().at("dog")], d / n, 1e-6);
    EXPECT_EQ(v[m.vocabulary().at("fish")], 0.0f);
}

TEST(Tfidf, EmptyInputsRejected) {
    std::vector<std::string> none;
    EXPECT_THROW(fit_tfidf(none), PreconditionError);
    std::vector<std::string> blank = {"", "  "};
    EXPECT_THROW(fit_tfidf(blank), PreconditionError);
    std::vector<std::string> only_stop = {"the of and", "a an"};
    EXPECT_THROW(fit_tfidf(only_stop), Error);
}

TEST(Tfidf, LinearInTermCounts) {
    std::vector<std::string> texts = {"cat dog", "dog fish", "fish bird cat"};
    const auto m = fit_tfidf(texts);
    std::vector<std::string> once = {"cat", "dog", "fish"};
    std::vector<std::string> thrice;
    for (int k = 0; k < 3; ++k) thrice.insert(thrice.end(), once.begin(), once.end());
    const auto a = m.transform_unnormalized(once);
    const auto b = m.transform_unnormalized(thrice);
    ASSERT_EQ(a.indices, b.indices);
    for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(b.values[i], 3.0f * a.values[i], 1e-5);
}

TEST(Tfidf, MaxFeaturesKeepsMostFrequent) {
    std::vector<std::string> texts = {"common rare1", "common rare2", "common mid", "mid rare3"};
    const auto m = fit_tfidf(texts, 2);
    EXPECT_EQ(m.terms(), (std::vector<std::string>{"common", "mid"}));
}

TEST(Tfidf, Deterministic) {
    std::vector<std::string> texts = {"graphene oxide membrane", "membrane filtration water", "oxide glass"};
    const auto a = fit_tfidf(texts);
    const auto b = fit_tfidf(texts);
    EXPECT_EQ(a.terms(), b.terms());
    EXPECT_EQ(a.idf(), b.idf());
}
