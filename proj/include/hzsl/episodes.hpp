#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "hzsl/common.hpp"
#include "hzsl/inference.hpp"
#include "hzsl/matrix.hpp"

namespace hzsl {

/// Samples available for episode construction: features and labels of the
/// novel classes.
struct EpisodePool {
    Matrix features;
    std::vector<std::size_t> labels;
};

struct EpisodeResult {
    double mean_accuracy = 0.0;
    double ci95 = 0.0;  // 1.96 * stderr over episodes
    std::size_t n_episodes = 0;
};

/// Runs n_episodes n-way k-shot trials. Each trial draws n_way classes
/// without replacement, k_shot support samples per class and uses the rest
/// of those classes' samples as queries. classify receives the support
/// (class -> feature rows) and the query matrix and returns predicted
/// labels. Sampling is deterministic under the seed.
template <typename ClassifyFn>
EpisodeResult run_episodes(const EpisodePool& pool, std::size_t n_way, std::size_t k_shot,
                           std::size_t n_episodes, std::uint64_t seed,
                           ClassifyFn&& classify) {
    if (pool.features.rows() != pool.labels.size())
        throw validation_error("episodes: feature/label count mismatch");
    if (n_way < 2) throw validation_error("episodes: n_way must be at least 2");
    if (k_shot < 1) throw validation_error("episodes: k_shot must be at least 1");
    if (n_episodes < 1) throw validation_error("episodes: need at least one episode");

    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < pool.labels.size(); ++i)
        by_class[pool.labels[i]].push_back(i);
    std::vector<std::size_t> eligible;
    for (const auto& [cls, rows] : by_class)
        if (rows.size() > k_shot) eligible.push_back(cls);
    if (eligible.size() < n_way)
        throw validation_error("episodes: only " + std::to_string(eligible.size()) +
                               " classes have more than k_shot samples, need " +
                               std::to_string(n_way));

    Rng rng(seed);
    const std::size_t d = pool.features.cols();
    std::vector<double> accs;
    accs.reserve(n_episodes);
    for (std::size_t ep = 0; ep < n_episodes; ++ep) {
        std::vector<std::size_t> classes = eligible;
        for (std::size_t i = 0; i < n_way; ++i) {
            const std::size_t j = i + rng.index(classes.size() - i);
            std::swap(classes[i], classes[j]);
        }
        classes.resize(n_way);

        std::map<std::size_t, Matrix> support;
        std::vector<std::size_t> query_rows, query_truth;
        for (std::size_t cls : classes) {
            std::vector<std::size_t> rows = by_class[cls];
            for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
                const std::size_t j = i + rng.index(rows.size() - i);
                std::swap(rows[i], rows[j]);
            }
            Matrix sup(k_shot, d);
            for (std::size_t s = 0; s < k_shot; ++s) {
                const auto src = pool.features.row(rows[s]);
                std::copy(src.begin(), src.end(), sup.row(s).begin());
            }
            support.emplace(cls, std::move(sup));
            for (std::size_t s = k_shot; s < rows.size(); ++s) {
                query_rows.push_back(rows[s]);
                query_truth.push_back(cls);
            }
        }
        Matrix query(query_rows.size(), d);
        for (std::size_t i = 0; i < query_rows.size(); ++i) {
            const auto src = pool.features.row(query_rows[i]);
            std::copy(src.begin(), src.end(), query.row(i).begin());
        }

        const std::vector<std::size_t> pred = classify(support, query);
        if (pred.size() != query_truth.size())
            throw numerical_error("episodes: classifier returned wrong count");
        std::size_t hit = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred[i] == query_truth[i]) ++hit;
        accs.push_back(static_cast<double>(hit) /
                       static_cast<double>(std::max<std::size_t>(1, pred.size())));
    }

    EpisodeResult r;
    r.n_episodes = n_episodes;
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    r.mean_accuracy = mean;
    if (accs.size() > 1) {
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(accs.size() - 1);
        r.ci95 = 1.96 * std::sqrt(var / static_cast<double>(accs.size()));
    }
    return r;
}

/// Episode evaluation of the hierarchical few-shot predictor.
inline EpisodeResult fsl_episode_eval(const ProjectionModel& model, const ClassHierarchy& h,
                                      const SemanticTable& sem, const EpisodePool& pool,
                                      std::size_t n_way, std::size_t k_shot,
                                      std::size_t n_episodes, std::uint64_t seed,
                                      double lambda = 0.5, std::size_t top_k = 3) {
    return run_episodes(pool, n_way, k_shot, n_episodes, seed,
                        [&](const std::map<std::size_t, Matrix>& support,
                            const Matrix& query) {
                            const auto preds =
                                predict_fsl(model, h, support, query, sem, lambda, top_k);
                            std::vector<std::size_t> labels;
                            labels.reserve(preds.size());
                            for (const Prediction& p : preds) labels.push_back(p.label);
                            return labels;
                        });
}

}  // namespace hzsl
