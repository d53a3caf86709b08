#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hzsl/hierarchy.hpp"
#include "hzsl/matrix.hpp"
#include "hzsl/model.hpp"
#include "hzsl/semantic_table.hpp"

namespace hzsl {

/// Superclasses surviving the top-down pruning pass, per layer, plus the
/// resulting leaf-level label candidates. used_fallback marks samples
/// where pruning removed every admissible leaf and the full restricted
/// label set was restored.
struct CandidateSet {
    std::vector<std::vector<std::size_t>> layer_top;  // [l-1]: kept nodes of layer l
    std::vector<std::size_t> leaf_candidates;         // ascending class indices
    bool used_fallback = false;
};

struct Prediction {
    std::size_t label = 0;
    double distance = 0.0;
    CandidateSet candidates;
};

/// Projects semantic rows into feature space: row i of the result is
/// P[i]·Wᵀ, the feature-space prototype under the reconstruction F ≈ ẼWᵀ.
inline Matrix embed_prototypes(const Matrix& w, const Matrix& p) {
    if (p.cols() != w.cols())
        throw validation_error("embed_prototypes: semantic dimension mismatch");
    return matmul_nt(p, w);
}

namespace detail {

inline double cosine_distance(std::span<const double> a, std::span<const double> b,
                              const char* what) {
    const double na = norm2(a), nb = norm2(b);
    if (na <= 0.0 || nb <= 0.0)
        throw validation_error(std::string(what) + ": zero-norm vector");
    return 1.0 - dot(a, b) / (na * nb);
}

}  // namespace detail

/// Indices of the k nearest rows of proto_feat by cosine distance,
/// ascending; ties break to the lower index, fewer than k rows return all.
inline std::vector<std::size_t> topk_superclasses(std::span<const double> f,
                                                  const Matrix& proto_feat,
                                                  std::size_t k = 3) {
    if (proto_feat.rows() == 0)
        throw validation_error("topk_superclasses: no candidates");
    if (k < 1) throw validation_error("topk_superclasses: k must be positive");
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(proto_feat.rows());
    for (std::size_t i = 0; i < proto_feat.rows(); ++i)
        ranked.emplace_back(
            detail::cosine_distance(f, proto_feat.row(i), "topk_superclasses"), i);
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
        out.push_back(ranked[i].second);
    return out;
}

/// Top-down candidate pruning: rank all superclasses of the highest layer,
/// then at each lower layer rank only the children of the kept nodes and
/// keep the top k again; leaves under the kept layer-1 nodes intersected
/// with restrict_to become the label candidates. An empty intersection
/// falls back to the whole restricted set and is flagged.
inline CandidateSet derive_candidates(const ClassHierarchy& h, const ProjectionModel& model,
                                      std::span<const double> f,
                                      const std::vector<std::size_t>& restrict_to,
                                      std::size_t top_k = 3) {
    if (restrict_to.empty())
        throw validation_error("derive_candidates: empty label restriction");
    if (model.n_layers() != h.n_r)
        throw validation_error("derive_candidates: model/hierarchy layer count mismatch");

    CandidateSet cs;
    cs.layer_top.resize(h.n_r);
    std::vector<std::size_t> kept;
    for (std::size_t layer = h.n_r; layer >= 1; --layer) {
        const Matrix& proto = h.prototypes[layer - 1];
        std::vector<std::size_t> pool;
        if (layer == h.n_r) {
            pool.resize(proto.rows());
            for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
        } else {
            const auto& parents = h.parent_of[layer];  // layer l -> layer l+1
            for (std::size_t node = 0; node < parents.size(); ++node)
                if (std::find(kept.begin(), kept.end(), parents[node]) != kept.end())
                    pool.push_back(node);
        }
        Matrix pool_feat(pool.size(), model.d_f());
        {
            Matrix sem_rows(pool.size(), proto.cols());
            for (std::size_t i = 0; i < pool.size(); ++i) {
                const auto src = proto.row(pool[i]);
                std::copy(src.begin(), src.end(), sem_rows.row(i).begin());
            }
            pool_feat = embed_prototypes(model.layer_w[layer - 1], sem_rows);
        }
        const auto local = topk_superclasses(f, pool_feat, top_k);
        kept.clear();
        for (std::size_t idx : local) kept.push_back(pool[idx]);
        cs.layer_top[layer - 1] = kept;
        if (layer == 1) break;
    }

    if (h.n_r == 0) {
        cs.leaf_candidates = restrict_to;
        std::sort(cs.leaf_candidates.begin(), cs.leaf_candidates.end());
        return cs;
    }
    const auto& layer1 = cs.layer_top[0];
    for (std::size_t c : restrict_to)
        if (std::find(layer1.begin(), layer1.end(), h.parent_of[0][c]) != layer1.end())
            cs.leaf_candidates.push_back(c);
    std::sort(cs.leaf_candidates.begin(), cs.leaf_candidates.end());
    if (cs.leaf_candidates.empty()) {
        cs.leaf_candidates = restrict_to;
        std::sort(cs.leaf_candidates.begin(), cs.leaf_candidates.end());
        cs.used_fallback = true;
    }
    return cs;
}

namespace detail {

inline void check_model_dims(const ProjectionModel& model, const ClassHierarchy& h,
                             const Matrix& f, const SemanticTable& sem) {
    model.validate();
    if (model.n_layers() != h.n_r)
        throw validation_error("predict: model has " + std::to_string(model.n_layers()) +
                               " layer projections but hierarchy has " +
                               std::to_string(h.n_r) + " layers");
    if (f.cols() != model.d_f())
        throw validation_error("predict: feature dimension mismatch");
    if (sem.dim() != model.d_z())
        throw validation_error("predict: semantic dimension mismatch");
    if (h.n_r > 0 && h.n_leaves != sem.total())
        throw validation_error("predict: hierarchy leaf count differs from class count");
}

/// Nearest candidate by cosine distance against precomputed prototype rows.
inline Prediction nearest_among(std::span<const double> f, const Matrix& proto_feat,
                                CandidateSet cs) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = cs.leaf_candidates.front();
    for (std::size_t c : cs.leaf_candidates) {
        const double d = cosine_distance(f, proto_feat.row(c), "predict");
        if (d < best) {
            best = d;
            arg = c;
        }
    }
    return {arg, best, std::move(cs)};
}

inline std::vector<Prediction> predict_restricted(const ProjectionModel& model,
                                                  const ClassHierarchy& h,
                                                  const Matrix& features,
                                                  const SemanticTable& sem,
                                                  const std::vector<std::size_t>& restrict_to,
                                                  std::size_t top_k) {
    check_model_dims(model, h, features, sem);
    if (restrict_to.empty())
        throw validation_error("predict: empty label restriction");
    const Matrix f = l2_normalized_rows(features, "predict: features");
    const Matrix proto_feat = embed_prototypes(model.class_w, sem.vectors);
    std::vector<Prediction> out;
    out.reserve(f.rows());
    for (std::size_t i = 0; i < f.rows(); ++i) {
        CandidateSet cs = derive_candidates(h, model, f.row(i), restrict_to, top_k);
        out.push_back(nearest_among(f.row(i), proto_feat, std::move(cs)));
    }
    return out;
}

}  // namespace detail

/// Zero-shot prediction: candidates restricted to the unseen classes, leaf
/// ranking by the class-level projection.
inline std::vector<Prediction> predict_zsl(const ProjectionModel& model,
                                           const ClassHierarchy& h, const Matrix& f_u,
                                           const SemanticTable& sem, std::size_t top_k = 3) {
    if (sem.unseen_count == 0)
        throw validation_error("predict_zsl: table has no unseen classes");
    std::vector<std::size_t> unseen(sem.unseen_count);
    for (std::size_t i = 0; i < sem.unseen_count; ++i) unseen[i] = sem.seen_count + i;
    return detail::predict_restricted(model, h, f_u, sem, unseen, top_k);
}

/// Generalised zero-shot prediction: all p+q classes are admissible.
inline std::vector<Prediction> predict_gzsl(const ProjectionModel& model,
                                            const ClassHierarchy& h, const Matrix& f_test,
                                            const SemanticTable& sem,
                                            std::size_t top_k = 3) {
    std::vector<std::size_t> all(sem.total());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return detail::predict_restricted(model, h, f_test, sem, all, top_k);
}

/// Few-shot prediction over the support's novel classes. Each class
/// prototype blends the mean of its ℓ2-normalised support features with the
/// projected semantic prototype: λ·support + (1−λ)·projection, renormalised.
inline std::vector<Prediction> predict_fsl(const ProjectionModel& model,
                                           const ClassHierarchy& h,
                                           const std::map<std::size_t, Matrix>& support,
                                           const Matrix& f_test, const SemanticTable& sem,
                                           double lambda = 0.5, std::size_t top_k = 3) {
    detail::check_model_dims(model, h, f_test, sem);
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw validation_error("predict_fsl: lambda must lie in [0, 1]");
    if (support.empty()) throw validation_error("predict_fsl: no novel classes");

    std::vector<std::size_t> novel;
    const Matrix embedded = embed_prototypes(model.class_w, sem.vectors);
    Matrix blended(sem.total(), model.d_f());
    for (const auto& [cls, rows] : support) {
        if (cls >= sem.total())
            throw validation_error("predict_fsl: support class out of range");
        if (rows.rows() == 0)
            throw validation_error("predict_fsl: empty support for class " +
                                   std::to_string(cls));
        novel.push_back(cls);
        const Matrix norm_rows = l2_normalized_rows(rows, "predict_fsl: support");
        std::vector<double> mean(model.d_f(), 0.0);
        for (std::size_t i = 0; i < norm_rows.rows(); ++i)
            for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += norm_rows(i, j);
        const double mn = norm2(mean);
        if (mn <= 0.0) throw validation_error("predict_fsl: degenerate support mean");
        const auto emb = embedded.row(cls);
        const double en = norm2(emb);
        if (en <= 0.0) throw validation_error("predict_fsl: zero-norm class prototype");
        auto dst = blended.row(cls);
        for (std::size_t j = 0; j < dst.size(); ++j)
            dst[j] = lambda * mean[j] / mn + (1.0 - lambda) * emb[j] / en;
        const double bn = norm2(dst);
        if (bn <= 0.0) throw validation_error("predict_fsl: prototypes cancelled out");
        for (double& v : dst) v /= bn;
    }

    const Matrix f = l2_normalized_rows(f_test, "predict_fsl: features");
    std::vector<Prediction> out;
    out.reserve(f.rows());
    for (std::size_t i = 0; i < f.rows(); ++i) {
        CandidateSet cs = derive_candidates(h, model, f.row(i), novel, top_k);
        out.push_back(detail::nearest_among(f.row(i), blended, std::move(cs)));
    }
    return out;
}

/// Flat nearest-neighbour baseline over a restricted label set: the same
/// class-level projection, no hierarchical pruning.
inline std::vector<Prediction> predict_flat(const ProjectionModel& model, const Matrix& f_test,
                                            const SemanticTable& sem,
                                            const std::vector<std::size_t>& restrict_to) {
    if (restrict_to.empty()) throw validation_error("predict_flat: empty label restriction");
    if (f_test.cols() != model.d_f())
        throw validation_error("predict_flat: feature dimension mismatch");
    const Matrix f = l2_normalized_rows(f_test, "predict_flat: features");
    const Matrix proto_feat = embed_prototypes(model.class_w, sem.vectors);
    std::vector<Prediction> out;
    out.reserve(f.rows());
    for (std::size_t i = 0; i < f.rows(); ++i) {
        CandidateSet cs;
        cs.leaf_candidates = restrict_to;
        std::sort(cs.leaf_candidates.begin(), cs.leaf_candidates.end());
        out.push_back(detail::nearest_among(f.row(i), proto_feat, std::move(cs)));
    }
    return out;
}

/// Full per-sample rankings for hit@k: pruned candidates first (ascending
/// distance), then the remaining restricted labels, also by distance.
inline std::vector<std::vector<std::size_t>> rank_labels(
    const ProjectionModel& model, const ClassHierarchy& h, const Matrix& f_test,
    const SemanticTable& sem, const std::vector<std::size_t>& restrict_to,
    std::size_t top_k = 3) {
    detail::check_model_dims(model, h, f_test, sem);
    if (restrict_to.empty()) throw validation_error("rank_labels: empty label restriction");
    const Matrix f = l2_normalized_rows(f_test, "rank_labels: features");
    const Matrix proto_feat = embed_prototypes(model.class_w, sem.vectors);
    std::vector<std::vector<std::size_t>> out;
    out.reserve(f.rows());
    for (std::size_t i = 0; i < f.rows(); ++i) {
        const CandidateSet cs = derive_candidates(h, model, f.row(i), restrict_to, top_k);
        const std::set<std::size_t> in_cand(cs.leaf_candidates.begin(),
                                            cs.leaf_candidates.end());
        std::vector<std::pair<double, std::size_t>> cand, rest;
        for (std::size_t c : restrict_to) {
            const double d = detail::cosine_distance(f.row(i), proto_feat.row(c), "rank_labels");
            (in_cand.count(c) ? cand : rest).emplace_back(d, c);
        }
        std::sort(cand.begin(), cand.end());
        std::sort(rest.begin(), rest.end());
        std::vector<std::size_t> ranking;
        ranking.reserve(cand.size() + rest.size());
        for (const auto& [d, c] : cand) ranking.push_back(c);
        for (const auto& [d, c] : rest) ranking.push_back(c);
        out.push_back(std::move(ranking));
    }
    return out;
}

}  // namespace hzsl
