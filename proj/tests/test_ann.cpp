#include <gtest/gtest.h>

#include <set>

#include "facet/ann.hpp"
#include "test_util.hpp"

using namespace facet;
using facet::testing::random_unit_vectors;
using facet::testing::TempDir;

namespace {

std::vector<ClusterIndex::Entry> entries_for(const std::vector<Vector>& vecs, const std::string& prefix = "d") {
    std::vector<ClusterIndex::Entry> out;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "%s%06zu", prefix.c_str(), i);
        out.push_back({{id, static_cast<std::uint32_t>(i % 3)}, vecs[i]});
    }
    return out;
}

void expect_sorted(const std::vector<Hit>& hits) {
    for (std::size_t i = 1; i < hits.size(); ++i) EXPECT_FALSE(hit_before(hits[i], hits[i - 1])) << i;
}

}  // namespace

TEST(ClusterIndex, SingleEntry) {
    const auto v = random_unit_vectors(2, 16, 1);
    auto idx = ClusterIndex::build(4, {{{"only", 0}, v[0]}});
    EXPECT_EQ(idx.size(), 1u);
    const auto hits = idx.query(v[1], 10);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].ref.doc_id, "only");
    EXPECT_EQ(hits[0].cluster_id, 4u);
}

TEST(ClusterIndex, IdenticalVectorRanksFirst) {
    const auto vecs = random_unit_vectors(300, 32, 2);
    const auto idx = ClusterIndex::build(0, entries_for(vecs));
    const auto hits = idx.query(vecs[123], 5);
    EXPECT_EQ(hits[0].ref, idx.refs()[123]);
    EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
}

TEST(ClusterIndex, TLargerThanSizeReturnsAllSorted) {
    const auto vecs = random_unit_vectors(7, 16, 3);
    const auto idx = ClusterIndex::build(0, entries_for(vecs));
    const auto hits = idx.query(random_unit_vectors(1, 16, 99)[0], 50);
    EXPECT_EQ(hits.size(), 7u);
    expect_sorted(hits);
}

TEST(ClusterIndex, TieBreakByRef) {
    const auto v = random_unit_vectors(1, 16, 4)[0];
    const auto idx = ClusterIndex::build(0, {{{"b", 1}, v}, {{"a", 2}, v}, {{"b", 0}, v}});
    const auto hits = idx.query(v, 3);
    EXPECT_EQ(hits[0].ref, (SentenceRef{"a", 2}));
    EXPECT_EQ(hits[1].ref, (SentenceRef{"b", 0}));
    EXPECT_EQ(hits[2].ref, (SentenceRef{"b", 1}));
}

TEST(ClusterIndex, SmallIndexTop5MatchesExact) {
    const auto vecs = random_unit_vectors(200, 24, 5);
    const auto idx = ClusterIndex::build(0, entries_for(vecs));
    EXPECT_TRUE(idx.is_exact());
    for (const auto& q : random_unit_vectors(20, 24, 6)) {
        const auto a = idx.query(q, 5);
        const auto e = exact_query(idx.refs(), idx.vectors(), q, 5);
        ASSERT_EQ(a.size(), e.size());
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].ref, e[i].ref);
    }
}

TEST(ClusterIndex, GraphWithLargeBeamIsExact) {
    const auto vecs = random_unit_vectors(200, 24, 7);
    IndexParams p;
    p.exact_threshold = 1;
    p.ef_search = 256;
    const auto idx = ClusterIndex::build(0, entries_for(vecs), p);
    EXPECT_FALSE(idx.is_exact());
    for (const auto& q : random_unit_vectors(20, 24, 8)) {
        const auto a = idx.query(q, 5);
        const auto e = exact_query(idx.refs(), idx.vectors(), q, 5);
        ASSERT_EQ(a.size(), 5u);
        for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(a[i].ref, e[i].ref);
    }
}

TEST(ClusterIndex, GraphHitsAreRealAndSorted) {
    const auto vecs = random_unit_vectors(1500, 32, 9);
    const auto idx = ClusterIndex::build(2, entries_for(vecs));
    EXPECT_FALSE(idx.is_exact());
    double recall = 0;
    const auto queries = random_unit_vectors(30, 32, 10);
    for (const auto& q : queries) {
        const auto hits = idx.query(q, 10);
        ASSERT_EQ(hits.size(), 10u);
        expect_sorted(hits);
        for (const auto& h : hits) {
            const auto row = idx.find(h.ref);
            ASSERT_TRUE(row);
            EXPECT_FLOAT_EQ(h.score, dot(idx.vectors().row(*row), q));
        }
        recall += recall_at(hits, exact_query(idx.refs(), idx.vectors(), q, 10));
    }
    EXPECT_GE(recall / queries.size(), 0.95);
}

TEST(ClusterIndex, DeterministicBuild) {
    const auto vecs = random_unit_vectors(1200, 16, 11);
    TempDir tmp;
    ClusterIndex::build(0, entries_for(vecs)).save(tmp.file("a.idx"));
    auto shuffled = entries_for(vecs);
    std::reverse(shuffled.begin(), shuffled.end());
    ClusterIndex::build(0, shuffled).save(tmp.file("b.idx"));
    EXPECT_EQ(facet::testing::read_file(tmp.file("a.idx")), facet::testing::read_file(tmp.file("b.idx")));
}

TEST(ClusterIndex, SaveLoadRoundTrip) {
    TempDir tmp;
    for (std::size_t n : {50, 1100}) {
        const auto vecs = random_unit_vectors(n, 16, n);
        const auto idx = ClusterIndex::build(7, entries_for(vecs));
        idx.save(tmp.file("x.idx"));
        const auto back = ClusterIndex::load(tmp.file("x.idx"));
        EXPECT_EQ(back.cluster_id(), 7u);
        EXPECT_EQ(back.size(), n);
        EXPECT_EQ(back.is_exact(), idx.is_exact());
        EXPECT_EQ(back.params(), idx.params());
        for (const auto& q : random_unit_vectors(5, 16, 1000 + n)) {
            const auto a = idx.query(q, 10), b = back.query(q, 10);
            ASSERT_EQ(a.size(), b.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                EXPECT_EQ(a[i].ref, b[i].ref);
                EXPECT_EQ(a[i].score, b[i].score);
            }
        }
    }
}

TEST(ClusterIndex, LoadRejectsGarbage) {
    TempDir tmp;
    facet::testing::write_file(tmp.file("bad.idx"), "FACETIDX\x07");
    EXPECT_THROW(ClusterIndex::load(tmp.file("bad.idx")), Error);
}

TEST(ClusterIndex, BuildPreconditions) {
    EXPECT_THROW(ClusterIndex::build(0, {}), PreconditionError);
    auto v = random_unit_vectors(2, 16, 12);
    EXPECT_THROW(ClusterIndex::build(0, {{{"a", 0}, v[0]}, {{"b", 0}, Vector(8, 0.25f)}}), ContractError);
    EXPECT_THROW(ClusterIndex::build(0, {{{"a", 0}, Vector(16, 1.0f)}}), PreconditionError);
    EXPECT_THROW(ClusterIndex::build(0, {{{"a", 0}, v[0]}, {{"a", 0}, v[1]}}), PreconditionError);
}

TEST(ClusterIndex, QueryPreconditions) {
    const auto vecs = random_unit_vectors(5, 16, 13);
    const auto idx = ClusterIndex::build(0, entries_for(vecs));
    EXPECT_THROW(idx.query(Vector(8, 0.0f), 3), ContractError);
    EXPECT_THROW(idx.query(vecs[0], 0), PreconditionError);
    EXPECT_THROW(exact_query({}, Matrix(0, 16), vecs[0], 3), PreconditionError);
}

TEST(Recall, Definition) {
    std::vector<Hit> e = {{{"a", 0}, 0.9f, 0}, {{"b", 0}, 0.8f, 0}, {{"c", 0}, 0.7f, 0}, {{"d", 0}, 0.6f, 0}};
    std::vector<Hit> a = {{{"a", 0}, 0.9f, 0}, {{"c", 0}, 0.7f, 0}, {{"x", 0}, 0.5f, 0}};
    EXPECT_DOUBLE_EQ(recall_at(a, e), 0.5);
    EXPECT_DOUBLE_EQ(recall_at(e, e), 1.0);
}
