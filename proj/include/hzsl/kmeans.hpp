#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "hzsl/common.hpp"
#include "hzsl/matrix.hpp"

namespace hzsl {

struct KMeansResult {
    std::vector<std::size_t> assignments;
    Matrix centroids;  // k × d
    double inertia = 0.0;
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed
/// seed: nearest-centroid ties break to the lowest cluster index and empty
/// clusters are repaired by stealing the farthest point from a cluster
/// that can spare one. inertia_trace, when given, records the inertia
/// after every centroid update; it is nonincreasing.
inline KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iters = 300,
                           std::vector<double>* inertia_trace = nullptr) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    if (n == 0) throw validation_error("kmeans: empty input");
    if (k < 1 || k > n) throw validation_error("kmeans: k out of range [1, n]");

    Rng rng(seed);
    Matrix centroids(k, d);
    std::vector<bool> chosen(n, false);

    // k-means++ seeding
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    {
        const std::size_t first = rng.index(n);
        chosen[first] = true;
        for (std::size_t j = 0; j < d; ++j) centroids(0, j) = points(first, j);
        for (std::size_t c = 1; c < k; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                d2[i] = std::min(d2[i], detail::sq_dist(points.row(i), centroids.row(c - 1)));
                total += d2[i];
            }
            std::size_t pick = n;
            if (total > 0.0) {
                const double r = rng.uniform() * total;
                double run = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    run += d2[i];
                    if (run >= r) {
                        pick = i;
                        break;
                    }
                }
            }
            if (pick == n || chosen[pick]) {
                // duplicates exhausted the spread; take the lowest unchosen index
                pick = n;
                for (std::size_t i = 0; i < n; ++i)
                    if (!chosen[i]) {
                        pick = i;
                        break;
                    }
                if (pick == n) pick = rng.index(n);
            }
            chosen[pick] = true;
            for (std::size_t j = 0; j < d; ++j) centroids(c, j) = points(pick, j);
        }
    }

    std::vector<std::size_t> assign(n, 0), prev(n, k + 1);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double dist = detail::sq_dist(points.row(i), centroids.row(c));
                if (dist < best) {
                    best = dist;
                    arg = c;
                }
            }
            assign[i] = arg;
        }
        // repair empty clusters
        std::fill(count.begin(), count.end(), std::size_t{0});
        for (std::size_t i = 0; i < n; ++i) ++count[assign[i]];
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] > 0) continue;
            double far = -1.0;
            std::size_t donor = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (count[assign[i]] < 2) continue;
                const double dist = detail::sq_dist(points.row(i), centroids.row(assign[i]));
                if (dist > far) {
                    far = dist;
                    donor = i;
                }
            }
            if (donor == n) throw numerical_error("kmeans: cannot repair empty cluster");
            --count[assign[donor]];
            assign[donor] = c;
            ++count[c];
        }
        // update centroids
        Matrix next(k, d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) next(assign[i], j) += points(i, j);
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < d; ++j)
                next(c, j) /= static_cast<double>(count[c]);
        centroids = std::move(next);
        if (inertia_trace) {
            double cur = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                cur += detail::sq_dist(points.row(i), centroids.row(assign[i]));
            inertia_trace->push_back(cur);
        }
        if (assign == prev) break;
        prev = assign;
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        inertia += detail::sq_dist(points.row(i), centroids.row(assign[i]));
    return {std::move(assign), std::move(centroids), inertia};
}

}  // namespace hzsl
