#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "facet/common.hpp"

namespace facet {

struct KMeansConfig {
    std::size_t k = 20;
    std::size_t max_iters = 100;
    double tol = 1e-4;  // relative inertia improvement that stops Lloyd iterations
    std::uint64_t seed = 0;
    std::size_t n_init = 3;
};

struct ClusterModel {
    Matrix centroids;
    std::vector<std::uint32_t> assignments;
    std::vector<std::size_t> sizes;
    double inertia = 0.0;
    /// Inertia after every assignment step of the winning restart, ending with
    /// the value against the final centroids.
    std::vector<double> inertia_trace;

    std::size_t k() const noexcept { return centroids.rows(); }
};

namespace detail {

inline double sq_dist_d(std::span<const float> a, std::span<const float> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return s;
}

// [0, 1) from the raw 64-bit engine output, independent of the standard
// library's distribution implementations.
inline double unit_real(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(unit_real(rng) * static_cast<double>(n));
}

inline std::size_t count_distinct_rows(const Matrix& pts) {
    std::vector<std::size_t> idx(pts.rows());
    std::iota(idx.begin(), idx.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
        auto ra = pts.row(a), rb = pts.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    };
    std::sort(idx.begin(), idx.end(), less);
    std::size_t distinct = idx.empty() ? 0 : 1;
    for (std::size_t i = 1; i < idx.size(); ++i)
        if (less(idx[i - 1], idx[i])) ++distinct;
    return distinct;
}

inline Matrix kmeanspp_seed(const Matrix& pts, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = pts.rows();
    Matrix c(k, pts.dim());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::size_t pick = uniform_index(rng, n);
    for (std::size_t j = 0; j < k; ++j) {
        std::copy_n(pts.row(pick).begin(), pts.dim(), c.row(j).begin());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist_d(pts.row(i), c.row(j)));
            total += d2[i];
        }
        if (j + 1 == k) break;
        double r = unit_real(rng) * total;
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            r -= d2[i];
            pick = i;
            if (r < 0.0) break;
        }
        if (pick == n) throw PreconditionError("kmeans: fewer distinct points than k");
    }
    return c;
}

struct LloydState {
    std::vector<std::uint32_t> assign;
    std::vector<double> dist;  // squared distance to own centroid
    std::vector<std::size_t> sizes;
};

// Returns true if any assignment changed. Points keep their current cluster
// unless another centroid is strictly closer.
inline bool assign_points(const Matrix& pts, const Matrix& c, LloydState& st, bool first) {
    bool changed = false;
    const std::size_t k = c.rows();
    std::fill(st.sizes.begin(), st.sizes.end(), 0);
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        std::uint32_t best = first ? 0 : st.assign[i];
        double best_d = sq_dist_d(pts.row(i), c.row(best));
        for (std::uint32_t j = 0; j < k; ++j) {
            if (j == best) continue;
            const double d = sq_dist_d(pts.row(i), c.row(j));
            if (d < best_d || (first && d == best_d && j < best)) {
                best_d = d;
                best = j;
            }
        }
        changed = changed || first || best != st.assign[i];
        st.assign[i] = best;
        st.dist[i] = best_d;
        ++st.sizes[best];
    }
    return changed;
}

// Moves the globally farthest point (from a cluster with more than one
// member) into each empty cluster and re-centres that cluster on it.
inline void repair_empty(const Matrix& pts, Matrix& c, LloydState& st) {
    for (std::uint32_t j = 0; j < c.rows(); ++j) {
        if (st.sizes[j] != 0) continue;
        std::size_t far = pts.rows();
        for (std::size_t i = 0; i < pts.rows(); ++i) {
            if (st.sizes[st.assign[i]] < 2) continue;
            if (far == pts.rows() || st.dist[i] > st.dist[far]) far = i;
        }
        if (far == pts.rows()) throw PreconditionError("kmeans: cannot repair empty cluster");
        --st.sizes[st.assign[far]];
        st.assign[far] = j;
        st.sizes[j] = 1;
        st.dist[far] = 0.0;
        std::copy_n(pts.row(far).begin(), pts.dim(), c.row(j).begin());
    }
}

inline void update_centroids(const Matrix& pts, Matrix& c, const LloydState& st) {
    const std::size_t dim = pts.dim();
    std::vector<double> acc(c.rows() * dim, 0.0);
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        auto r = pts.row(i);
        double* a = acc.data() + st.assign[i] * dim;
        for (std::size_t d = 0; d < dim; ++d) a[d] += r[d];
    }
    for (std::size_t j = 0; j < c.rows(); ++j) {
        if (st.sizes[j] == 0) continue;
        const double inv = 1.0 / static_cast<double>(st.sizes[j]);
        auto row = c.row(j);
        for (std::size_t d = 0; d < dim; ++d) row[d] = static_cast<float>(acc[j * dim + d] * inv);
    }
}

inline double own_inertia(const Matrix& pts, const Matrix& c, LloydState& st) {
    double s = 0.0;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        st.dist[i] = sq_dist_d(pts.row(i), c.row(st.assign[i]));
        s += st.dist[i];
    }
    return s;
}

inline ClusterModel lloyd_run(const Matrix& pts, const KMeansConfig& cfg, std::uint64_t run_seed) {
    std::mt19937_64 rng(run_seed);
    ClusterModel m;
    m.centroids = kmeanspp_seed(pts, cfg.k, rng);

    LloydState st{std::vector<std::uint32_t>(pts.rows(), 0), std::vector<double>(pts.rows(), 0.0),
                  std::vector<std::size_t>(cfg.k, 0)};
    assign_points(pts, m.centroids, st, /*first=*/true);
    repair_empty(pts, m.centroids, st);
    double prev = own_inertia(pts, m.centroids, st);
    m.inertia_trace.push_back(prev);

    for (std::size_t it = 0; it < cfg.max_iters && prev > 0.0; ++it) {
        update_centroids(pts, m.centroids, st);
        const bool changed = assign_points(pts, m.centroids, st, false);
        repair_empty(pts, m.centroids, st);
        const double cur = own_inertia(pts, m.centroids, st);
        m.inertia_trace.push_back(cur);
        const double improvement = (prev - cur) / prev;
        prev = cur;
        if (!changed || improvement < cfg.tol) break;
    }
    update_centroids(pts, m.centroids, st);
    m.inertia = own_inertia(pts, m.centroids, st);
    m.inertia_trace.push_back(m.inertia);
    m.assignments = std::move(st.assign);
    m.sizes = std::move(st.sizes);
    return m;
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding and best-of-n_init restarts.
///
/// Distances are squared Euclidean. Every returned cluster is non-empty;
/// the result is a pure function of (points, cfg).
inline ClusterModel kmeans(const Matrix& points, const KMeansConfig& cfg) {
    if (cfg.k == 0) throw PreconditionError("kmeans: k must be positive");
    if (!(cfg.tol > 0.0)) throw PreconditionError("kmeans: tol must be positive");
    if (cfg.n_init == 0) throw PreconditionError("kmeans: n_init must be positive");
    if (points.rows() < cfg.k)
        throw PreconditionError("kmeans: k=" + std::to_string(cfg.k) + " exceeds number of points " +
                                std::to_string(points.rows()));
    for (std::size_t i = 0; i < points.rows(); ++i)
        if (!all_finite(points.row(i))) throw PreconditionError("kmeans: non-finite point " + std::to_string(i));
    if (detail::count_distinct_rows(points) < cfg.k)
        throw PreconditionError("kmeans: k=" + std::to_string(cfg.k) + " exceeds number of distinct points");

    ClusterModel best;
    bool have = false;
    std::uint64_t seed_state = cfg.seed;
    for (std::size_t r = 0; r < cfg.n_init; ++r) {
        auto m = detail::lloyd_run(points, cfg, splitmix64(seed_state));
        if (!have || m.inertia < best.inertia) {
            best = std::move(m);
            have = true;
        }
    }
    return best;
}

inline ClusterModel kmeans(const std::vector<Vector>& points, const KMeansConfig& cfg) {
    return kmeans(Matrix::from_rows(points), cfg);
}

// ---------------------------------------------------------------------------
// Purity
// ---------------------------------------------------------------------------

/// Sum over clusters of the largest single-class member count.
template <class ClusterId, class Label>
std::size_t purity_count(std::span<const ClusterId> clusters, std::span<const Label> labels) {
    if (clusters.size() != labels.size())
        throw PreconditionError("purity: " + std::to_string(clusters.size()) + " assignments vs " +
                                std::to_string(labels.size()) + " labels");
    std::map<ClusterId, std::map<Label, std::size_t>> table;
    for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][labels[i]];
    std::size_t total = 0;
    for (const auto& [cl, counts] : table) {
        std::size_t mx = 0;
        for (const auto& [lab, n] : counts) mx = std::max(mx, n);
        total += mx;
    }
    return total;
}

/// purity = (1/N) * sum_k max_j |cluster_k ∩ class_j|, in [0, 1].
template <class ClusterId, class Label>
double purity(std::span<const ClusterId> clusters, std::span<const Label> labels) {
    if (clusters.empty()) throw PreconditionError("purity: no points");
    return static_cast<double>(purity_count(clusters, labels)) / static_cast<double>(clusters.size());
}

template <class ClusterId, class Label>
double purity(const std::vector<ClusterId>& clusters, const std::vector<Label>& labels) {
    return purity(std::span<const ClusterId>(clusters), std::span<const Label>(labels));
}

/// Keyed form: both maps must cover exactly the same point ids.
template <class Key, class ClusterId, class Label>
double purity(const std::map<Key, ClusterId>& clusters, const std::map<Key, Label>& labels) {
    if (clusters.size() != labels.size())
        throw PreconditionError("purity: assignment and label key sets differ");
    std::vector<ClusterId> c;
    std::vector<Label> l;
    auto it = labels.begin();
    for (const auto& [key, cl] : clusters) {
        if (it->first != key) throw PreconditionError("purity: assignment and label key sets differ");
        c.push_back(cl);
        l.push_back(it->second);
        ++it;
    }
    return purity(c, l);
}

}  // namespace facet
