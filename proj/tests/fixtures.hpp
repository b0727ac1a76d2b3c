#pragma once

#include <memory>

#include "facet/snapshot.hpp"
#include "facet/synthetic.hpp"

namespace facet::testing {

// 600-document topic corpus with 20 global clusters, built once per binary.
inline const Snapshot& small_snapshot() {
    static const Snapshot snap = [] {
        synthetic::TopicCorpusConfig tc;
        tc.documents = 600;
        auto corpus = synthetic::topic_corpus(tc);
        return build_snapshot(std::move(corpus), FallbackProvider(EmbeddingKind::document, 64),
                              std::make_shared<FallbackProvider>(EmbeddingKind::sentence, 64));
    }();
    return snap;
}

inline std::shared_ptr<const Snapshot> small_snapshot_ptr() {
    static const auto p = std::make_shared<const Snapshot>(small_snapshot());
    return p;
}

}  // namespace facet::testing
