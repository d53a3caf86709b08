#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hzsl/matrix.hpp"

namespace hzsl {

/// Sample-similarity graph over feature rows: symmetric nonnegative
/// weights, zero diagonal, no isolated vertices.
struct SimilarityGraph {
    std::size_t n = 0;
    Matrix weights;
    std::vector<double> degrees;
};

/// Normalised graph Laplacian L = I - D^(-1/2) W D^(-1/2).
struct Laplacian {
    std::size_t n = 0;
    Matrix matrix;
};

/// Wraps an explicit weight matrix as a graph, enforcing the invariants.
inline SimilarityGraph similarity_graph_from_weights(Matrix w) {
    const std::size_t n = w.rows();
    if (n < 2 || w.cols() != n)
        throw validation_error("similarity graph: weights must be square, n >= 2");
    for (std::size_t u = 0; u < n; ++u) {
        if (w(u, u) != 0.0)
            throw validation_error("similarity graph: diagonal must be zero");
        for (std::size_t v = 0; v < n; ++v) {
            if (w(u, v) < 0.0)
                throw validation_error("similarity graph: negative weight");
            if (w(u, v) != w(v, u))
                throw validation_error("similarity graph: weights not symmetric");
        }
    }
    std::vector<double> deg(n);
    for (std::size_t u = 0; u < n; ++u) {
        deg[u] = std::accumulate(w.row(u).begin(), w.row(u).end(), 0.0);
        if (deg[u] <= 0.0)
            throw validation_error("similarity graph: isolated vertex " + std::to_string(u));
    }
    return {n, std::move(w), std::move(deg)};
}

/// k-nearest-neighbour graph under cosine similarity. Similarities are
/// clamped to [0, 1] and the result is symmetrised with an elementwise max,
/// so a vertex can end up with more than k neighbours.
inline SimilarityGraph build_similarity(const Matrix& features, std::size_t k) {
    const std::size_t n = features.rows();
    if (n < 2) throw validation_error("build_similarity: need at least 2 samples");
    if (k < 1 || k >= n)
        throw validation_error("build_similarity: k out of range [1, n)");

    std::vector<double> inv_norm(n);
    for (std::size_t u = 0; u < n; ++u) {
        const double nu = norm2(features.row(u));
        if (nu <= 0.0)
            throw validation_error("build_similarity: zero-norm feature row " +
                                   std::to_string(u));
        inv_norm[u] = 1.0 / nu;
    }

    Matrix sim(n, n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) {
            double s = dot(features.row(u), features.row(v)) * inv_norm[u] * inv_norm[v];
            s = std::clamp(s, 0.0, 1.0);
            sim(u, v) = s;
            sim(v, u) = s;
        }

    Matrix w(n, n);
    std::vector<std::size_t> order;
    order.reserve(n - 1);
    for (std::size_t u = 0; u < n; ++u) {
        order.clear();
        for (std::size_t v = 0; v < n; ++v)
            if (v != u) order.push_back(v);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return sim(u, a) > sim(u, b); });
        for (std::size_t j = 0; j < k; ++j) w(u, order[j]) = sim(u, order[j]);
    }
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) {
            const double m = std::max(w(u, v), w(v, u));
            w(u, v) = m;
            w(v, u) = m;
        }
    return similarity_graph_from_weights(std::move(w));
}

/// L = I - D^(-1/2) W D^(-1/2); entries for u <= v are mirrored so the
/// result is symmetric to the last bit.
inline Laplacian normalized_laplacian(const SimilarityGraph& g) {
    const std::size_t n = g.n;
    std::vector<double> isq(n);
    for (std::size_t u = 0; u < n; ++u) {
        if (g.degrees[u] <= 0.0)
            throw validation_error("normalized_laplacian: isolated vertex " +
                                   std::to_string(u));
        isq[u] = 1.0 / std::sqrt(g.degrees[u]);
    }
    Matrix l(n, n);
    for (std::size_t u = 0; u < n; ++u) {
        l(u, u) = 1.0 - g.weights(u, u) * isq[u] * isq[u];
        for (std::size_t v = u + 1; v < n; ++v) {
            const double val = -g.weights(u, v) * isq[u] * isq[v];
            l(u, v) = val;
            l(v, u) = val;
        }
    }
    return {n, std::move(l)};
}

}  // namespace hzsl
