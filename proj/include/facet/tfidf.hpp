#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "facet/common.hpp"
#include "facet/text.hpp"

namespace facet {

struct SparseVector {
    std::vector<std::uint32_t> indices;  // ascending
    std::vector<float> values;

    bool is_zero() const noexcept { return indices.empty(); }

    Vector to_dense(std::size_t dim) const {
        Vector v(dim, 0.0f);
        for (std::size_t i = 0; i < indices.size(); ++i) v[indices[i]] = values[i];
        return v;
    }
};

/// Smoothed TF-IDF: idf(t) = ln((1 + N) / (1 + df(t))) + 1, tf = raw count.
class TfidfModel {
public:
    const std::unordered_map<std::string, std::uint32_t>& vocabulary() const noexcept { return vocab_; }
    const std::vector<double>& idf() const noexcept { return idf_; }
    const std::vector<std::size_t>& document_frequency() const noexcept { return df_; }
    const std::vector<std::string>& terms() const noexcept { return terms_; }
    std::size_t doc_count() const noexcept { return doc_count_; }
    std::size_t size() const noexcept { return terms_.size(); }

    std::optional<double> idf_of(const std::string& token) const {
        auto it = vocab_.find(token);
        if (it == vocab_.end()) return std::nullopt;
        return idf_[it->second];
    }

    /// tf * idf entries without normalization.
    SparseVector transform_unnormalized(std::span<const std::string> tokens) const {
        std::map<std::uint32_t, double> tf;
        for (const auto& t : tokens)
            if (auto it = vocab_.find(t); it != vocab_.end()) tf[it->second] += 1.0;
        SparseVector out;
        for (const auto& [idx, count] : tf) {
            out.indices.push_back(idx);
            out.values.push_back(static_cast<float>(count * idf_[idx]));
        }
        return out;
    }

    /// L2-normalized tf-idf vector of `text`. A text sharing no token with the
    /// vocabulary yields the zero vector (check is_zero()).
    SparseVector transform(std::string_view text) const {
        const auto tokens = text::tokenize(text);
        auto v = transform_unnormalized(tokens);
        double n2 = 0.0;
        for (float x : v.values) n2 += static_cast<double>(x) * x;
        if (n2 > 0.0) {
            const double inv = 1.0 / std::sqrt(n2);
            for (float& x : v.values) x = static_cast<float>(x * inv);
        }
        return v;
    }

    static double smoothed_idf(std::size_t n_docs, std::size_t df) {
        return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
    }

private:
    friend TfidfModel fit_tfidf_tokens(const std::vector<std::vector<std::string>>&, std::optional<std::size_t>);

    std::unordered_map<std::string, std::uint32_t> vocab_;
    std::vector<std::string> terms_;
    std::vector<double> idf_;
    std::vector<std::size_t> df_;
    std::size_t doc_count_ = 0;
};

/// Fits on pre-tokenized documents. Vocabulary columns follow lexicographic
/// token order. With `max_features`, only the terms with the highest document
/// frequency are kept (ties broken lexicographically).
inline TfidfModel fit_tfidf_tokens(const std::vector<std::vector<std::string>>& docs,
                                   std::optional<std::size_t> max_features = std::nullopt) {
    if (docs.empty()) throw PreconditionError("fit_tfidf: no texts");
    std::map<std::string, std::size_t> df;
    for (const auto& toks : docs) {
        std::vector<std::string> uniq(toks.begin(), toks.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (auto& t : uniq) ++df[t];
    }
    if (df.empty()) throw Error("fit_tfidf: empty vocabulary after filtering");

    std::vector<std::pair<std::string, std::size_t>> kept(df.begin(), df.end());
    if (max_features && kept.size() > *max_features) {
        std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        kept.resize(*max_features);
        std::sort(kept.begin(), kept.end());
    }

    TfidfModel m;
    m.doc_count_ = docs.size();
    for (auto& [term, d] : kept) {
        m.vocab_.emplace(term, static_cast<std::uint32_t>(m.terms_.size()));
        m.terms_.push_back(term);
        m.idf_.push_back(TfidfModel::smoothed_idf(docs.size(), d));
        m.df_.push_back(d);
    }
    return m;
}

inline TfidfModel fit_tfidf(std::span<const std::string> texts,
                            std::optional<std::size_t> max_features = std::nullopt) {
    if (texts.empty()) throw PreconditionError("fit_tfidf: no texts");
    bool any = false;
    std::vector<std::vector<std::string>> docs;
    docs.reserve(texts.size());
    for (const auto& t : texts) {
        any = any || !text::trim(t).empty();
        docs.push_back(text::tokenize(t));
    }
    if (!any) throw PreconditionError("fit_tfidf: all texts are empty");
    return fit_tfidf_tokens(docs, max_features);
}

}  // namespace facet
