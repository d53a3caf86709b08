#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hzsl/common.hpp"
#include "hzsl/matrix.hpp"
#include "hzsl/semantic_table.hpp"

namespace hzsl {

/// Desk-scale benchmark with planted structure: class semantics drawn from
/// a two-level Gaussian mixture (superclusters of clusters, branching
/// about five at each level), features generated through an isometric
/// linear map plus optional noise.
struct SyntheticSpec {
    std::size_t p = 40;          // seen classes
    std::size_t q = 10;          // unseen classes
    std::size_t d_f = 32;
    std::size_t d_z = 16;
    std::size_t n_per_class = 30;
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (p < 1 || q < 1) throw validation_error("synthetic: p and q must be >= 1");
        if (n_per_class < 1)
            throw validation_error("synthetic: n_per_class must be >= 1");
        if (d_z < 1) throw validation_error("synthetic: d_z must be >= 1");
        if (d_f < d_z)
            throw validation_error("synthetic: d_f < d_z, no isometric planted map exists");
        if (!(noise_sigma >= 0.0))
            throw validation_error("synthetic: noise_sigma must be >= 0");
    }
};

struct SyntheticData {
    SemanticTable table;  // seen classes first
    Matrix train_features;
    std::vector<std::size_t> train_labels;  // table indices, all seen
    Matrix test_features;
    std::vector<std::size_t> test_labels;   // table indices, all unseen
    Matrix planted_map;                     // d_f × d_z, orthonormal columns
};

/// Random matrix with orthonormal columns (Gram-Schmidt on Gaussian draws).
inline Matrix orthonormal_columns(Rng& rng, std::size_t rows, std::size_t cols) {
    if (rows < cols)
        throw validation_error("orthonormal_columns: more columns than rows");
    Matrix m(rows, cols);
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t i = 0; i < rows; ++i) m(i, j) = rng.normal();
        for (std::size_t k = 0; k < j; ++k) {
            double proj = 0.0;
            for (std::size_t i = 0; i < rows; ++i) proj += m(i, j) * m(i, k);
            for (std::size_t i = 0; i < rows; ++i) m(i, j) -= proj * m(i, k);
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < rows; ++i) nrm += m(i, j) * m(i, j);
        nrm = std::sqrt(nrm);
        if (nrm <= 1e-12)
            throw numerical_error("orthonormal_columns: degenerate draw");
        for (std::size_t i = 0; i < rows; ++i) m(i, j) /= nrm;
    }
    return m;
}

inline SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t n_classes = spec.p + spec.q;

    // two-level blob structure, branching ~5 to match typical hierarchy t
    const std::size_t n_clusters = std::max<std::size_t>(1, n_classes / 5);
    const std::size_t n_super = std::max<std::size_t>(1, n_clusters / 5);
    constexpr double kSuperScale = 5.0;
    constexpr double kClusterScale = 1.0;
    constexpr double kClassScale = 0.25;

    Matrix super_centers(n_super, spec.d_z);
    for (std::size_t s = 0; s < n_super; ++s)
        for (std::size_t j = 0; j < spec.d_z; ++j)
            super_centers(s, j) = kSuperScale * rng.normal();
    Matrix cluster_centers(n_clusters, spec.d_z);
    for (std::size_t c = 0; c < n_clusters; ++c)
        for (std::size_t j = 0; j < spec.d_z; ++j)
            cluster_centers(c, j) =
                super_centers(c % n_super, j) + kClusterScale * rng.normal();
    Matrix class_vecs(n_classes, spec.d_z);
    std::vector<std::size_t> class_cluster(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        class_cluster[c] = c % n_clusters;
        for (std::size_t j = 0; j < spec.d_z; ++j)
            class_vecs(c, j) =
                cluster_centers(class_cluster[c], j) + kClassScale * rng.normal();
    }

    // spread the unseen classes round-robin over the clusters (and thereby
    // over the superclusters), so superclasses mix both domains
    std::vector<bool> unseen(n_classes, false);
    {
        std::size_t chosen = 0;
        while (chosen < spec.q) {
            for (std::size_t cl = 0; cl < n_clusters && chosen < spec.q; ++cl) {
                for (std::size_t c = 0; c < n_classes; ++c) {
                    if (class_cluster[c] != cl || unseen[c]) continue;
                    unseen[c] = true;
                    ++chosen;
                    break;
                }
            }
        }
    }

    std::vector<std::string> names;
    Matrix vectors(n_classes, spec.d_z);
    std::vector<std::size_t> table_index(n_classes);
    {
        std::size_t next = 0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t c = 0; c < n_classes; ++c) {
                if (unseen[c] != (pass == 1)) continue;
                char buf[32];
                std::snprintf(buf, sizeof buf, "class_%03zu", c);
                names.emplace_back(buf);
                for (std::size_t j = 0; j < spec.d_z; ++j)
                    vectors(next, j) = class_vecs(c, j);
                table_index[c] = next++;
            }
        }
    }

    SyntheticData out;
    out.table = make_semantic_table(std::move(names), std::move(vectors), spec.p);
    out.planted_map = orthonormal_columns(rng, spec.d_f, spec.d_z);

    out.train_features = Matrix(spec.p * spec.n_per_class, spec.d_f);
    out.test_features = Matrix(spec.q * spec.n_per_class, spec.d_f);
    std::size_t tr = 0, te = 0;
    for (std::size_t idx = 0; idx < n_classes; ++idx) {
        const bool is_unseen = idx >= spec.p;
        for (std::size_t s = 0; s < spec.n_per_class; ++s) {
            Matrix& dst = is_unseen ? out.test_features : out.train_features;
            const std::size_t row = is_unseen ? te++ : tr++;
            for (std::size_t j = 0; j < spec.d_f; ++j) {
                double v = 0.0;
                for (std::size_t k = 0; k < spec.d_z; ++k)
                    v += out.table.vectors(idx, k) * out.planted_map(j, k);
                dst(row, j) = v + (spec.noise_sigma > 0.0
                                       ? spec.noise_sigma * rng.normal()
                                       : 0.0);
            }
            (is_unseen ? out.test_labels : out.train_labels).push_back(idx);
        }
    }
    return out;
}

}  // namespace hzsl
