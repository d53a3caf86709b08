#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hzsl/dataset.hpp"
#include "hzsl/graph.hpp"
#include "hzsl/hierarchy.hpp"
#include "hzsl/inference.hpp"
#include "hzsl/model.hpp"
#include "hzsl/projection.hpp"

namespace hzsl {

/// Run-wide configuration. One parameter triple is shared by every
/// superclass layer; the class level carries its own copy (identical by
/// default, and cross-validation tunes a single triple for both).
struct TrainConfig {
    LayerParams superclass;
    LayerParams class_level;
    std::size_t graph_k = 10;
    std::size_t graph_sample_cap = 0;  // 0: use all seen samples
    std::size_t top_k = 3;             // superclass pruning width at inference
    double fsl_lambda = 0.5;
    std::uint64_t seed = 1;

    void validate() const {
        superclass.validate();
        class_level.validate();
        if (graph_k < 1) throw validation_error("config: graph_k must be >= 1");
        if (top_k < 1) throw validation_error("config: top_k must be >= 1");
        if (!(fsl_lambda >= 0.0 && fsl_lambda <= 1.0))
            throw validation_error("config: fsl_lambda must lie in [0, 1]");
    }
};

inline TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    try {
        if (j.contains("superclass"))
            cfg.superclass = detail::params_from_json(j.at("superclass"));
        if (j.contains("class"))
            cfg.class_level = detail::params_from_json(j.at("class"));
        else
            cfg.class_level = cfg.superclass;
        cfg.graph_k = j.value("graph_k", cfg.graph_k);
        cfg.graph_sample_cap = j.value("graph_sample_cap", cfg.graph_sample_cap);
        cfg.top_k = j.value("top_k", cfg.top_k);
        cfg.fsl_lambda = j.value("fsl_lambda", cfg.fsl_lambda);
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline nlohmann::json config_to_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["superclass"] = detail::params_to_json(cfg.superclass);
    j["class"] = detail::params_to_json(cfg.class_level);
    j["graph_k"] = cfg.graph_k;
    j["graph_sample_cap"] = cfg.graph_sample_cap;
    j["top_k"] = cfg.top_k;
    j["fsl_lambda"] = cfg.fsl_lambda;
    j["seed"] = cfg.seed;
    return j;
}

struct TrainOutput {
    ProjectionModel model;
    std::vector<std::vector<double>> traces;  // one per layer, class level last
};

namespace detail {

/// Deterministic per-class round-robin subsample of row indices.
inline std::vector<std::size_t> cap_rows(const std::vector<std::size_t>& rows,
                                         const std::vector<std::size_t>& labels,
                                         std::size_t cap) {
    if (cap == 0 || rows.size() <= cap) return rows;
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t r : rows) by_class[labels[r]].push_back(r);
    std::vector<std::size_t> out;
    out.reserve(cap);
    for (std::size_t round = 0; out.size() < cap; ++round) {
        bool any = false;
        for (auto& [cls, members] : by_class) {
            if (round < members.size() && out.size() < cap) {
                out.push_back(members[round]);
                any = true;
            }
        }
        if (!any) break;
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

/// Trains the per-layer and class-level projections over the seen-class
/// samples of a dataset (Algorithm 2, training half): expand superclass
/// semantic matrices per layer, then alternate Sylvester solves per layer
/// with one shared parameter triple, and finish with the class-level run.
/// Feature rows are ℓ2-normalised before learning; the sample-similarity
/// graph is built once over those rows and its Schur form reused by every
/// run that has epsilon > 0.
inline TrainOutput train_model(const Dataset& ds, const ClassHierarchy& h,
                               const TrainConfig& cfg) {
    cfg.validate();
    if (h.n_r > 0 && h.n_leaves != ds.table.total())
        throw validation_error("train: hierarchy has " + std::to_string(h.n_leaves) +
                               " leaves, dataset has " + std::to_string(ds.table.total()) +
                               " classes");
    if (h.n_r > 0 && h.prototypes[0].cols() != ds.table.dim())
        throw validation_error("train: hierarchy semantic dimension mismatch");

    std::vector<std::size_t> train_rows = ds.rows_with(true);
    if (train_rows.empty()) throw validation_error("train: no seen-class samples");
    train_rows = detail::cap_rows(train_rows, ds.labels, cfg.graph_sample_cap);

    const Matrix f = l2_normalized_rows(ds.gather(train_rows), "train: features");
    const std::vector<std::size_t> labels = ds.gather_labels(train_rows);

    const bool need_graph =
        (h.n_r > 0 && cfg.superclass.epsilon > 0.0) || cfg.class_level.epsilon > 0.0;
    std::optional<Laplacian> lap;
    std::optional<SchurForm> lap_schur;
    if (need_graph) {
        if (cfg.graph_k >= f.rows())
            throw validation_error("train: graph_k = " + std::to_string(cfg.graph_k) +
                                   " needs more than " + std::to_string(f.rows()) +
                                   " training samples");
        lap = normalized_laplacian(build_similarity(f, cfg.graph_k));
        lap_schur = schur_decompose(lap->matrix);
    }

    TrainOutput out;
    for (std::size_t layer = 1; layer <= h.n_r; ++layer) {
        const Matrix e0 = expand_superclass_matrix(h, layer, labels);
        LearnResult r = learn_projection(f, e0, lap ? &*lap : nullptr, cfg.superclass,
                                         lap_schur ? &*lap_schur : nullptr);
        out.model.layer_w.push_back(std::move(r.w));
        out.model.final_layer_e.push_back(std::move(r.e_tilde));
        out.model.params_used.push_back(cfg.superclass);
        out.traces.push_back(std::move(r.trace));
    }
    {
        Matrix z(labels.size(), ds.table.dim());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto src = ds.table.vectors.row(labels[i]);
            std::copy(src.begin(), src.end(), z.row(i).begin());
        }
        LearnResult r = learn_class_projection(f, z, lap ? &*lap : nullptr,
                                               cfg.class_level,
                                               lap_schur ? &*lap_schur : nullptr);
        out.model.class_w = std::move(r.w);
        out.model.final_class_e = std::move(r.e_tilde);
        out.model.class_params = cfg.class_level;
        out.traces.push_back(std::move(r.trace));
    }
    return out;
}

// --- hyperparameter grid search ---------------------------------------------

struct TuneGrid {
    std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> betas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> epsilons{0.0, 1e-4, 1e-3, 1e-2, 1e-1};
};

inline TuneGrid grid_from_json(const nlohmann::json& j) {
    TuneGrid g;
    try {
        if (j.contains("alphas")) g.alphas = j.at("alphas").get<std::vector<double>>();
        if (j.contains("betas")) g.betas = j.at("betas").get<std::vector<double>>();
        if (j.contains("epsilons"))
            g.epsilons = j.at("epsilons").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("grid: ") + e.what());
    }
    if (g.alphas.empty() || g.betas.empty() || g.epsilons.empty())
        throw validation_error("grid: empty axis");
    return g;
}

struct TuneResult {
    double alpha = 0.0;
    double beta = 0.0;
    double epsilon = 0.0;
    double cv_accuracy = 0.0;
};

/// Class-wise k-fold cross-validation over the seen classes: each fold
/// holds out a subset of classes, learns the class-level projection on the
/// remainder and scores flat top-1 accuracy of the held-out classes'
/// samples against their prototypes. The best (alpha, beta, epsilon)
/// triple by mean accuracy is shared by all projection levels.
inline TuneResult tune_parameters(const Dataset& ds, const TrainConfig& base,
                                  const TuneGrid& grid, std::size_t folds = 5) {
    base.validate();
    const std::size_t p = ds.table.seen_count;
    if (p < 2) throw validation_error("tune: need at least two seen classes");
    folds = std::min(folds, p);
    if (folds < 2) throw validation_error("tune: need at least two folds");

    std::vector<std::size_t> classes(p);
    for (std::size_t i = 0; i < p; ++i) classes[i] = i;
    Rng rng(base.seed);
    for (std::size_t i = 0; i + 1 < classes.size(); ++i) {
        const std::size_t j = i + rng.index(classes.size() - i);
        std::swap(classes[i], classes[j]);
    }

    const bool any_graph =
        std::any_of(grid.epsilons.begin(), grid.epsilons.end(),
                    [](double e) { return e > 0.0; });

    struct Combo {
        double a, b, e, acc_sum = 0.0;
        std::size_t n = 0;
    };
    std::vector<Combo> combos;
    for (double a : grid.alphas)
        for (double b : grid.betas)
            for (double e : grid.epsilons) combos.push_back({a, b, e});

    const std::vector<std::size_t> seen_rows = ds.rows_with(true);
    for (std::size_t fold = 0; fold < folds; ++fold) {
        std::vector<bool> held(p, false);
        for (std::size_t i = fold; i < p; i += folds) held[classes[i]] = true;

        std::vector<std::size_t> tr_rows, va_rows;
        for (std::size_t r : seen_rows)
            (held[ds.labels[r]] ? va_rows : tr_rows).push_back(r);
        if (tr_rows.empty() || va_rows.empty()) continue;

        const Matrix f_tr = l2_normalized_rows(ds.gather(tr_rows), "tune: features");
        const std::vector<std::size_t> l_tr = ds.gather_labels(tr_rows);
        Matrix z_tr(l_tr.size(), ds.table.dim());
        for (std::size_t i = 0; i < l_tr.size(); ++i) {
            const auto src = ds.table.vectors.row(l_tr[i]);
            std::copy(src.begin(), src.end(), z_tr.row(i).begin());
        }
        const Matrix f_va = ds.gather(va_rows);
        const std::vector<std::size_t> l_va = ds.gather_labels(va_rows);
        std::vector<std::size_t> held_classes;
        for (std::size_t c = 0; c < p; ++c)
            if (held[c]) held_classes.push_back(c);

        std::optional<Laplacian> lap;
        std::optional<SchurForm> lap_schur;
        if (any_graph && base.graph_k < f_tr.rows()) {
            lap = normalized_laplacian(build_similarity(f_tr, base.graph_k));
            lap_schur = schur_decompose(lap->matrix);
        }

        for (Combo& c : combos) {
            LayerParams params = base.class_level;
            params.alpha = c.a;
            params.beta = c.b;
            params.epsilon = c.e;
            if (params.epsilon > 0.0 && !lap) continue;  // fold too small for a graph
            const LearnResult r =
                learn_projection(f_tr, z_tr, lap ? &*lap : nullptr, params,
                                 lap_schur ? &*lap_schur : nullptr);
            ProjectionModel flat;
            flat.class_w = r.w;
            const auto preds = predict_flat(flat, f_va, ds.table, held_classes);
            std::size_t hit = 0;
            for (std::size_t i = 0; i < preds.size(); ++i)
                if (preds[i].label == l_va[i]) ++hit;
            c.acc_sum += static_cast<double>(hit) / static_cast<double>(preds.size());
            c.n += 1;
        }
    }

    TuneResult best;
    double best_acc = -1.0;
    for (const Combo& c : combos) {
        if (c.n == 0) continue;
        const double acc = c.acc_sum / static_cast<double>(c.n);
        if (acc > best_acc) {
            best_acc = acc;
            best = {c.a, c.b, c.e, acc};
        }
    }
    if (best_acc < 0.0) throw validation_error("tune: no combination could be evaluated");
    return best;
}

}  // namespace hzsl
