#pragma once

#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hzsl/common.hpp"

namespace hzsl {

struct EvalReport {
    double top1 = 0.0;                         // sample-level accuracy
    std::map<std::size_t, double> per_class_top1;
    std::optional<double> hit_at_k_value;
    std::size_t hit_k = 0;
    std::optional<double> acc_s;
    std::optional<double> acc_u;
    std::optional<double> hm;
    std::size_t n_test = 0;
};

inline void check_pred_truth(const std::vector<std::size_t>& pred,
                             const std::vector<std::size_t>& truth) {
    if (pred.size() != truth.size())
        throw validation_error("metrics: prediction/truth length mismatch");
    if (pred.empty()) throw validation_error("metrics: empty input");
}

inline double top1_accuracy(const std::vector<std::size_t>& pred,
                            const std::vector<std::size_t>& truth) {
    check_pred_truth(pred, truth);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

/// Class-conditional accuracy for every class present in truth.
inline std::map<std::size_t, double> per_class_accuracy(
    const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
    check_pred_truth(pred, truth);
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> tally;  // hit, total
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto& [hit, total] = tally[truth[i]];
        ++total;
        if (pred[i] == truth[i]) ++hit;
    }
    std::map<std::size_t, double> out;
    for (const auto& [cls, ht] : tally)
        out[cls] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
    return out;
}

/// Mean of the class-conditional accuracies (macro average).
inline double mean_per_class_accuracy(const std::map<std::size_t, double>& per_class) {
    if (per_class.empty()) throw validation_error("metrics: empty per-class map");
    double s = 0.0;
    for (const auto& [cls, acc] : per_class) s += acc;
    return s / static_cast<double>(per_class.size());
}

/// Fraction of samples whose true label appears among the first k entries
/// of their ranked prediction list.
inline double hit_at_k(const std::vector<std::vector<std::size_t>>& ranked,
                       const std::vector<std::size_t>& truth, std::size_t k = 5) {
    if (ranked.size() != truth.size())
        throw validation_error("hit_at_k: ranking/truth length mismatch");
    if (ranked.empty()) throw validation_error("hit_at_k: empty input");
    if (k < 1) throw validation_error("hit_at_k: k must be positive");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const std::size_t upto = std::min(k, ranked[i].size());
        for (std::size_t j = 0; j < upto; ++j)
            if (ranked[i][j] == truth[i]) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(ranked.size());
}

/// Generalised ZSL report: acc_s and acc_u are the mean per-class
/// accuracies inside the seen and unseen partitions of the truth labels,
/// and HM their harmonic mean (0 when both vanish).
inline EvalReport gzsl_report(const std::vector<std::size_t>& pred,
                              const std::vector<std::size_t>& truth,
                              const std::set<std::size_t>& seen_set) {
    check_pred_truth(pred, truth);
    EvalReport r;
    r.n_test = pred.size();
    r.top1 = top1_accuracy(pred, truth);
    r.per_class_top1 = per_class_accuracy(pred, truth);

    double s_sum = 0.0, u_sum = 0.0;
    std::size_t s_cnt = 0, u_cnt = 0;
    for (const auto& [cls, acc] : r.per_class_top1) {
        if (seen_set.count(cls)) {
            s_sum += acc;
            ++s_cnt;
        } else {
            u_sum += acc;
            ++u_cnt;
        }
    }
    if (s_cnt == 0 || u_cnt == 0)
        throw validation_error("gzsl_report: a seen/unseen partition is empty");
    r.acc_s = s_sum / static_cast<double>(s_cnt);
    r.acc_u = u_sum / static_cast<double>(u_cnt);
    const double denom = *r.acc_s + *r.acc_u;
    r.hm = denom > 0.0 ? 2.0 * (*r.acc_s) * (*r.acc_u) / denom : 0.0;
    return r;
}

/// JSON rendering; class names, when provided, replace numeric indices in
/// the per-class map.
inline nlohmann::json report_to_json(const EvalReport& r,
                                     const std::vector<std::string>* names = nullptr) {
    nlohmann::json j;
    j["n_test"] = r.n_test;
    j["top1"] = r.top1;
    nlohmann::json pc = nlohmann::json::object();
    for (const auto& [cls, acc] : r.per_class_top1) {
        const std::string key =
            names && cls < names->size() ? (*names)[cls] : std::to_string(cls);
        pc[key] = acc;
    }
    j["per_class_top1"] = std::move(pc);
    if (r.hit_at_k_value) {
        j["hit_at_" + std::to_string(r.hit_k)] = *r.hit_at_k_value;
    }
    if (r.acc_s) j["acc_s"] = *r.acc_s;
    if (r.acc_u) j["acc_u"] = *r.acc_u;
    if (r.hm) j["hm"] = *r.hm;
    return j;
}

/// Fixed-width text table of the headline numbers.
inline std::string report_to_table(const EvalReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(18) << "metric" << std::right << std::setw(10) << "value"
       << "\n";
    auto row = [&os](const std::string& name, double v) {
        os << std::left << std::setw(18) << name << std::right << std::setw(10)
           << std::fixed << std::setprecision(4) << v << "\n";
    };
    row("top1", r.top1);
    row("per_class_top1", mean_per_class_accuracy(r.per_class_top1));
    if (r.hit_at_k_value) row("hit@" + std::to_string(r.hit_k), *r.hit_at_k_value);
    if (r.acc_s) row("acc_s", *r.acc_s);
    if (r.acc_u) row("acc_u", *r.acc_u);
    if (r.hm) row("hm", *r.hm);
    os << std::left << std::setw(18) << "n_test" << std::right << std::setw(10) << r.n_test
       << "\n";
    return os.str();
}

}  // namespace hzsl
