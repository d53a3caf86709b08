#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "hzsl/kmeans.hpp"
#include "hzsl/matrix.hpp"
#include "hzsl/semantic_table.hpp"

namespace hzsl {

/// Tree over all classes: leaves are the p+q classes, layer 1 is the first
/// superclass layer above them and layer n_r the topmost. parent_of[0]
/// maps each leaf to its layer-1 superclass; parent_of[l] (l >= 1) maps
/// layer-l nodes to layer-(l+1). Layer prototypes are the means of the
/// member leaves' semantic vectors, not intermediate centroids.
struct ClassHierarchy {
    std::size_t t = 0;
    std::size_t n_r = 0;
    std::vector<std::size_t> layer_sizes;             // r_1 .. r_{n_r}
    std::vector<std::vector<std::size_t>> parent_of;  // n_r maps, see above
    std::vector<Matrix> prototypes;                   // prototypes[l-1]: r_l × d_z
    std::size_t n_leaves = 0;

    /// Superclass chain of a leaf, one entry per layer (layer 1 first).
    std::vector<std::size_t> ancestors_of(std::size_t class_index) const {
        if (class_index >= n_leaves)
            throw validation_error("ancestors_of: class index " +
                                   std::to_string(class_index) + " out of range");
        std::vector<std::size_t> chain(n_r);
        std::size_t node = class_index;
        for (std::size_t l = 0; l < n_r; ++l) {
            node = parent_of[l][node];
            chain[l] = node;
        }
        return chain;
    }

    /// Leaves whose layer-`layer` ancestor is `node` (layer is 1-based).
    std::vector<std::size_t> members_of(std::size_t layer, std::size_t node) const {
        check_layer(layer);
        std::vector<std::size_t> out;
        for (std::size_t leaf = 0; leaf < n_leaves; ++leaf) {
            std::size_t cur = leaf;
            for (std::size_t l = 0; l < layer; ++l) cur = parent_of[l][cur];
            if (cur == node) out.push_back(leaf);
        }
        return out;
    }

    /// Nodes of layer `layer`-1 (leaves when layer == 1) under `node`.
    std::vector<std::size_t> children_of(std::size_t layer, std::size_t node) const {
        check_layer(layer);
        std::vector<std::size_t> out;
        const auto& map = parent_of[layer - 1];
        for (std::size_t i = 0; i < map.size(); ++i)
            if (map[i] == node) out.push_back(i);
        return out;
    }

    void check_layer(std::size_t layer) const {
        if (layer < 1 || layer > n_r)
            throw validation_error("hierarchy: layer " + std::to_string(layer) +
                                   " out of range [1, " + std::to_string(n_r) + "]");
    }
};

/// Builds the hierarchy by repeated k-means over semantic vectors: the
/// first superclass layer clusters the leaves into floor((p+q)/t) groups,
/// each later layer clusters the previous layer's prototypes into a
/// t-times smaller count, stopping before a layer would fall below t
/// nodes. A table too small for even one valid layer yields n_r = 0 and
/// downstream inference degrades to flat nearest-neighbour search.
inline ClassHierarchy build_hierarchy(const SemanticTable& sem, std::size_t t,
                                      std::uint64_t seed) {
    const std::size_t n = sem.total();
    if (t < 2) throw validation_error("build_hierarchy: t must be at least 2");
    if (n < t)
        throw validation_error("build_hierarchy: p+q = " + std::to_string(n) +
                               " is smaller than t = " + std::to_string(t));

    ClassHierarchy h;
    h.t = t;
    h.n_leaves = n;
    for (std::size_t r = n / t; r >= t; r /= t) h.layer_sizes.push_back(r);
    h.n_r = h.layer_sizes.size();

    Rng master(seed);
    Matrix lower = sem.vectors;  // points clustered at the current layer
    std::vector<std::size_t> leaf_anc(n);  // leaf -> node at the layer being built
    for (std::size_t l = 0; l < h.n_r; ++l) {
        const std::size_t r = h.layer_sizes[l];
        const KMeansResult km = kmeans(lower, r, master.next_u64());
        h.parent_of.push_back(km.assignments);
        for (std::size_t leaf = 0; leaf < n; ++leaf)
            leaf_anc[leaf] = l == 0 ? km.assignments[leaf] : km.assignments[leaf_anc[leaf]];

        Matrix proto(r, sem.dim());
        std::vector<std::size_t> count(r, 0);
        for (std::size_t leaf = 0; leaf < n; ++leaf) {
            ++count[leaf_anc[leaf]];
            for (std::size_t j = 0; j < sem.dim(); ++j)
                proto(leaf_anc[leaf], j) += sem.vectors(leaf, j);
        }
        for (std::size_t s = 0; s < r; ++s)
            for (std::size_t j = 0; j < sem.dim(); ++j)
                proto(s, j) /= static_cast<double>(count[s]);
        h.prototypes.push_back(std::move(proto));
        lower = h.prototypes.back();
    }
    return h;
}

/// N×d_z matrix whose row i is the layer-`layer` superclass prototype of
/// sample i's class.
inline Matrix expand_superclass_matrix(const ClassHierarchy& h, std::size_t layer,
                                       const std::vector<std::size_t>& labels) {
    h.check_layer(layer);
    const Matrix& proto = h.prototypes[layer - 1];
    Matrix out(labels.size(), proto.cols());
    std::vector<std::size_t> anc_cache(h.n_leaves, h.layer_sizes[layer - 1]);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t leaf = labels[i];
        if (leaf >= h.n_leaves)
            throw validation_error("expand_superclass_matrix: label " +
                                   std::to_string(leaf) + " out of range");
        if (anc_cache[leaf] == h.layer_sizes[layer - 1]) {
            std::size_t cur = leaf;
            for (std::size_t l = 0; l < layer; ++l) cur = h.parent_of[l][cur];
            anc_cache[leaf] = cur;
        }
        const auto src = proto.row(anc_cache[leaf]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

// --- JSON serialisation ----------------------------------------------------

inline nlohmann::json hierarchy_to_json(const ClassHierarchy& h) {
    nlohmann::json j;
    j["t"] = h.t;
    j["n_r"] = h.n_r;
    j["layer_sizes"] = h.layer_sizes;
    j["parent_of"] = h.parent_of;
    auto protos = nlohmann::json::array();
    for (const Matrix& p : h.prototypes) {
        auto layer = nlohmann::json::array();
        for (std::size_t i = 0; i < p.rows(); ++i)
            layer.push_back(std::vector<double>(p.row(i).begin(), p.row(i).end()));
        protos.push_back(std::move(layer));
    }
    j["prototypes"] = std::move(protos);
    return j;
}

inline ClassHierarchy hierarchy_from_json(const nlohmann::json& j) {
    ClassHierarchy h;
    try {
        h.t = j.at("t").get<std::size_t>();
        h.n_r = j.at("n_r").get<std::size_t>();
        h.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        h.parent_of = j.at("parent_of").get<std::vector<std::vector<std::size_t>>>();
        for (const auto& layer : j.at("prototypes")) {
            const auto rows = layer.get<std::vector<std::vector<double>>>();
            Matrix p(rows.size(), rows.empty() ? 0 : rows.front().size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != p.cols())
                    throw validation_error("hierarchy json: ragged prototype rows");
                std::copy(rows[i].begin(), rows[i].end(), p.row(i).begin());
            }
            h.prototypes.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("hierarchy json: ") + e.what());
    }
    if (h.layer_sizes.size() != h.n_r || h.parent_of.size() != h.n_r ||
        h.prototypes.size() != h.n_r)
        throw validation_error("hierarchy json: layer counts do not match n_r");
    if (h.t < 2) throw validation_error("hierarchy json: t must be at least 2");
    h.n_leaves = h.n_r == 0 ? 0 : h.parent_of[0].size();
    for (std::size_t l = 0; l < h.n_r; ++l) {
        if (l > 0 && h.layer_sizes[l] >= h.layer_sizes[l - 1])
            throw validation_error("hierarchy json: layer sizes must strictly decrease");
        if (h.prototypes[l].rows() != h.layer_sizes[l])
            throw validation_error("hierarchy json: prototype row count mismatch");
        if (!h.prototypes[l].all_finite())
            throw validation_error("hierarchy json: non-finite prototype");
        const std::size_t expect = l == 0 ? h.n_leaves : h.layer_sizes[l - 1];
        if (h.parent_of[l].size() != expect)
            throw validation_error("hierarchy json: parent_of size mismatch at layer " +
                                   std::to_string(l + 1));
        for (std::size_t v : h.parent_of[l])
            if (v >= h.layer_sizes[l])
                throw validation_error("hierarchy json: parent index out of range");
    }
    return h;
}

}  // namespace hzsl
