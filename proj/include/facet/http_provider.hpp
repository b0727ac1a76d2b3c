#pragma once

#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "facet/embedding.hpp"

namespace facet {

/// Client for an external encoder service.
///
/// Protocol: POST <url> with {"texts": [...], "kind": "document"|"sentence"};
/// the service answers {"vectors": [[...], ...], "dimension": d}. Transport
/// failures and 5xx answers are retryable; anything that breaks the payload
/// contract (wrong count, wrong dimension) is fatal.
class HttpProvider final : public EmbeddingProvider {
public:
    HttpProvider(const std::string& url, EmbeddingKind kind, std::size_t dim)
        : url_(url), kind_(kind), dim_(dim) {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw PreconditionError("http provider url needs a scheme: " + url);
        const auto path_start = url.find('/', scheme_end + 3);
        base_ = url.substr(0, path_start);
        path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
    }

    std::string name() const override { return "http:" + url_; }
    std::size_t dimension() const override { return dim_; }
    EmbeddingKind kind() const override { return kind_; }

    std::vector<Vector> embed_batch(std::span<const std::string> texts) const override {
        nlohmann::json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())},
                               {"kind", std::string(to_string(kind_))}};
        httplib::Client cli(base_);
        cli.set_connection_timeout(5);
        cli.set_read_timeout(60);
        auto res = cli.Post(path_, body.dump(), "application/json");
        if (!res) throw RetryableError(name() + ": " + httplib::to_string(res.error()));
        if (res->status >= 500) throw RetryableError(name() + ": HTTP " + std::to_string(res->status));
        if (res->status != 200) throw ContractError(name() + ": HTTP " + std::to_string(res->status));

        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("vectors") || !j["vectors"].is_array())
            throw ContractError(name() + ": malformed response body");
        if (j.value("dimension", std::size_t{0}) != dim_)
            throw ContractError(name() + ": service dimension " + j.value("dimension", nlohmann::json()).dump() +
                                " != configured " + std::to_string(dim_));
        std::vector<Vector> out;
        try {
            for (const auto& row : j["vectors"]) out.push_back(row.get<Vector>());
        } catch (const nlohmann::json::exception& e) {
            throw ContractError(name() + ": bad vector payload: " + e.what());
        }
        check_and_normalize(*this, out, texts.size());
        return out;
    }

private:
    std::string url_;
    std::string base_;
    std::string path_;
    EmbeddingKind kind_;
    std::size_t dim_;
};

/// Parses a provider spec: "fallback" or "http:<url>".
inline std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec, EmbeddingKind kind,
                                                        std::size_t dim) {
    if (spec == "fallback") return std::make_unique<FallbackProvider>(kind, dim);
    if (spec.rfind("http:", 0) == 0 && spec.size() > 5) return std::make_unique<HttpProvider>(spec.substr(5), kind, dim);
    throw PreconditionError("unknown provider '" + spec + "' (expected fallback or http:<url>)");
}

}  // namespace facet
