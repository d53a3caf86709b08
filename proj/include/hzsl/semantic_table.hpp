#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "hzsl/matrix.hpp"

namespace hzsl {

/// Ordered class-name-to-semantic-vector table. Seen classes occupy
/// indices [0, seen_count), unseen classes the rest; the two ranges are
/// disjoint and exhaust the table.
struct SemanticTable {
    std::vector<std::string> names;
    Matrix vectors;  // (p+q) × d_z, row i belongs to names[i]
    std::size_t seen_count = 0;
    std::size_t unseen_count = 0;

    std::size_t total() const { return seen_count + unseen_count; }
    std::size_t dim() const { return vectors.cols(); }
    bool is_seen(std::size_t idx) const { return idx < seen_count; }
};

inline SemanticTable make_semantic_table(std::vector<std::string> names, Matrix vectors,
                                         std::size_t seen_count) {
    if (names.empty()) throw validation_error("semantic table: no classes");
    if (names.size() != vectors.rows())
        throw validation_error("semantic table: name/vector row count mismatch");
    if (seen_count > names.size())
        throw validation_error("semantic table: seen_count exceeds class count");
    if (vectors.cols() == 0) throw validation_error("semantic table: zero-dim vectors");
    if (!vectors.all_finite())
        throw validation_error("semantic table: non-finite semantic vector");
    std::unordered_set<std::string> uniq(names.begin(), names.end());
    if (uniq.size() != names.size())
        throw validation_error("semantic table: duplicate class name");
    const std::size_t unseen = names.size() - seen_count;
    return {std::move(names), std::move(vectors), seen_count, unseen};
}

}  // namespace hzsl
