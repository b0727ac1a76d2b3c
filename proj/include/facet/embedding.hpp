#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facet/common.hpp"
#include "facet/corpus.hpp"
#include "facet/text.hpp"

namespace facet {

enum class EmbeddingKind { document, sentence };

inline std::string_view to_string(EmbeddingKind k) noexcept {
    return k == EmbeddingKind::document ? "document" : "sentence";
}

/// An encoder that maps texts to fixed-dimension, unit-normalized vectors.
/// Implementations must be safe to call concurrently.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual EmbeddingKind kind() const = 0;

    /// One vector per input text, in input order.
    virtual std::vector<Vector> embed_batch(std::span<const std::string> texts) const = 0;

    Vector embed(const std::string& text) const {
        auto out = embed_batch(std::span<const std::string>(&text, 1));
        return std::move(out.front());
    }
};

// ---------------------------------------------------------------------------
// Offline fallback encoder
// ---------------------------------------------------------------------------

/// Seed of the implicit random sign matrix used by fallback_encode().
inline constexpr std::uint64_t kFallbackSeed = 0x5EED2021C0FFEE11ULL;
inline constexpr std::size_t kFallbackMinDim = 16;

/// Deterministic character n-gram encoder (n = 3..5).
///
/// The lowercased, whitespace-collapsed text is padded with one space on each
/// side; every n-gram is hashed and contributes its count times a row of a
/// +-1 matrix whose entries are generated from (kFallbackSeed, n-gram hash).
/// The sum is L2-normalized. Texts sharing many n-grams land close together,
/// which is all the search stack needs from an offline stand-in.
inline Vector fallback_encode(std::string_view text_in, std::size_t dim) {
    if (dim < kFallbackMinDim)
        throw PreconditionError("fallback_encode: dimension must be >= 16, got " + std::to_string(dim));
    const std::string padded = " " + text::to_lower(text::collapse_whitespace(text_in)) + " ";
    if (padded.size() <= 2) throw PreconditionError("fallback_encode: text is empty");

    std::vector<std::uint64_t> grams;
    for (std::size_t n = 3; n <= 5; ++n) {
        if (padded.size() < n) break;
        for (std::size_t i = 0; i + n <= padded.size(); ++i)
            grams.push_back(fnv1a64(std::string_view(padded).substr(i, n), fnv1a64(std::to_string(n))));
    }
    std::sort(grams.begin(), grams.end());

    std::vector<double> acc(dim, 0.0);
    for (std::size_t i = 0; i < grams.size();) {
        std::size_t j = i;
        while (j < grams.size() && grams[j] == grams[i]) ++j;
        const double count = static_cast<double>(j - i);
        std::uint64_t state = kFallbackSeed ^ grams[i];
        for (std::size_t base = 0; base < dim; base += 64) {
            std::uint64_t bits = splitmix64(state);
            const std::size_t end = std::min(dim, base + 64);
            for (std::size_t k = base; k < end; ++k, bits >>= 1) acc[k] += (bits & 1U) ? count : -count;
        }
        i = j;
    }

    double n2 = 0.0;
    for (double x : acc) n2 += x * x;
    const double inv = 1.0 / std::sqrt(n2);
    Vector v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = static_cast<float>(acc[k] * inv);
    return v;
}

class FallbackProvider final : public EmbeddingProvider {
public:
    FallbackProvider(EmbeddingKind kind, std::size_t dim) : kind_(kind), dim_(dim) {
        if (dim < kFallbackMinDim) throw PreconditionError("fallback provider dimension must be >= 16");
    }

    std::string name() const override { return "fallback-ngram"; }
    std::size_t dimension() const override { return dim_; }
    EmbeddingKind kind() const override { return kind_; }

    std::vector<Vector> embed_batch(std::span<const std::string> texts) const override {
        std::vector<Vector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(fallback_encode(t, dim_));
        return out;
    }

private:
    EmbeddingKind kind_;
    std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Document / sentence embedding
// ---------------------------------------------------------------------------

/// Encoder input for a whole paper: "Title [SEP] Abstract".
inline std::string document_text(const Document& doc) { return doc.title + " [SEP] " + doc.abstract; }

/// Checks the provider contract on a returned batch and unit-normalizes it.
inline void check_and_normalize(const EmbeddingProvider& p, std::vector<Vector>& vecs, std::size_t expected) {
    if (vecs.size() != expected)
        throw ContractError(p.name() + ": returned " + std::to_string(vecs.size()) + " vectors for " +
                            std::to_string(expected) + " texts");
    for (auto& v : vecs) {
        if (v.size() != p.dimension())
            throw ContractError(p.name() + ": vector dimension " + std::to_string(v.size()) +
                                " != declared " + std::to_string(p.dimension()));
        if (!all_finite(v)) throw ContractError(p.name() + ": non-finite vector component");
        if (!normalize(v)) throw ContractError(p.name() + ": zero vector returned");
    }
}

inline std::vector<Vector> embed_texts(const EmbeddingProvider& p, std::span<const std::string> texts) {
    auto out = p.embed_batch(texts);
    check_and_normalize(p, out, texts.size());
    return out;
}

inline Vector embed_document(const Document& doc, const EmbeddingProvider& p) {
    if (p.kind() != EmbeddingKind::document)
        throw PreconditionError("embed_document: provider '" + p.name() + "' is not document-level");
    const std::string t = document_text(doc);
    return std::move(embed_texts(p, std::span<const std::string>(&t, 1)).front());
}

inline std::vector<Vector> embed_sentences(std::span<const std::string> texts, const EmbeddingProvider& p) {
    if (p.kind() != EmbeddingKind::sentence)
        throw PreconditionError("embed_sentence: provider '" + p.name() + "' is not sentence-level");
    for (const auto& t : texts)
        if (text::trim(t).empty()) throw PreconditionError("embed_sentence: empty sentence text");
    return embed_texts(p, texts);
}

inline Vector embed_sentence(const Sentence& s, const EmbeddingProvider& p) {
    return std::move(embed_sentences(std::span<const std::string>(&s.text, 1), p).front());
}

// ---------------------------------------------------------------------------
// Embedding cache
// ---------------------------------------------------------------------------

inline constexpr std::string_view kEmbeddingCacheMagic = "FACETEMB";
inline constexpr std::uint32_t kEmbeddingCacheVersion = 1;

inline std::uint64_t content_key(std::string_view text) { return fnv1a64(text); }

/// Vectors keyed by content hash for a single provider. Reads may run
/// concurrently; writes are serialized.
///
/// File layout (little-endian): magic "FACETEMB", u32 version, string
/// provider, u32 dimension, u64 count, then `count` fixed-width records of
/// (u64 key, dimension x f32) in ascending key order.
class EmbeddingCache {
public:
    EmbeddingCache(std::string provider, std::size_t dim) : provider_(std::move(provider)), dim_(dim) {}
    EmbeddingCache(EmbeddingCache&& other) noexcept
        : provider_(std::move(other.provider_)), dim_(other.dim_), map_(std::move(other.map_)) {}

    const std::string& provider() const noexcept { return provider_; }
    std::size_t dimension() const noexcept { return dim_; }

    std::size_t size() const {
        std::shared_lock lock(mu_);
        return map_.size();
    }

    std::optional<Vector> get(std::uint64_t key) const {
        std::shared_lock lock(mu_);
        auto it = map_.find(key);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<Vector> lookup(std::string_view text) const { return get(content_key(text)); }

    std::vector<std::uint64_t> keys() const {
        std::shared_lock lock(mu_);
        std::vector<std::uint64_t> out;
        out.reserve(map_.size());
        for (const auto& kv : map_) out.push_back(kv.first);
        return out;
    }

    void put(std::uint64_t key, Vector v) {
        if (v.size() != dim_) throw ContractError("embedding cache: dimension mismatch on insert");
        std::unique_lock lock(mu_);
        map_.insert_or_assign(key, std::move(v));
    }

    void save(const std::string& path) const {
        std::shared_lock lock(mu_);
        io::Writer w(path);
        w.magic(kEmbeddingCacheMagic);
        w.u32(kEmbeddingCacheVersion);
        w.str(provider_);
        w.u32(static_cast<std::uint32_t>(dim_));
        w.u64(map_.size());
        for (const auto& [k, v] : map_) {
            w.u64(k);
            w.floats(v);
        }
        w.close();
    }

    static EmbeddingCache load(const std::string& path) {
        io::Reader r(path);
        r.expect_magic(kEmbeddingCacheMagic);
        if (r.u32() != kEmbeddingCacheVersion) throw FormatError("unsupported embedding cache version: " + path);
        auto provider = r.str();
        const auto dim = r.u32();
        const auto count = r.u64();
        EmbeddingCache c(std::move(provider), dim);
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto key = r.u64();
            Vector v(dim);
            r.floats(v);
            c.map_.emplace(key, std::move(v));
        }
        return c;
    }

private:
    std::string provider_;
    std::size_t dim_;
    mutable std::shared_mutex mu_;
    std::map<std::uint64_t, Vector> map_;
};

/// Embeds `texts`, reusing cached vectors and batching only the misses.
inline std::vector<Vector> embed_cached(const EmbeddingProvider& p, std::span<const std::string> texts,
                                        EmbeddingCache* cache, std::size_t batch_size = 256) {
    if (cache && (cache->provider() != p.name() || cache->dimension() != p.dimension()))
        throw PreconditionError("embedding cache belongs to provider '" + cache->provider() + "'");
    std::vector<Vector> out(texts.size());
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (cache)
            if (auto v = cache->lookup(texts[i])) {
                out[i] = std::move(*v);
                continue;
            }
        missing.push_back(i);
    }
    for (std::size_t b = 0; b < missing.size(); b += batch_size) {
        const std::size_t e = std::min(missing.size(), b + batch_size);
        std::vector<std::string> batch;
        for (std::size_t i = b; i < e; ++i) batch.push_back(texts[missing[i]]);
        auto vecs = embed_texts(p, batch);
        for (std::size_t i = b; i < e; ++i) {
            if (cache) cache->put(content_key(texts[missing[i]]), vecs[i - b]);
            out[missing[i]] = std::move(vecs[i - b]);
        }
    }
    return out;
}

}  // namespace facet
