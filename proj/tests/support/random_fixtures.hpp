#pragma once

#include "hzsl/common.hpp"
#include "hzsl/matrix.hpp"

namespace hzsl::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                            double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

inline Matrix random_symmetric(Rng& rng, std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = rng.uniform(-1.0, 1.0);
            m(i, j) = v;
            m(j, i) = v;
        }
    return m;
}

/// Random matrix whose spectrum has real parts ≥ 1 (Gershgorin shift), so
/// any two such matrices give a safely nonsingular Sylvester operator.
inline Matrix random_shifted_positive(Rng& rng, std::size_t n) {
    Matrix m = random_matrix(rng, n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) += static_cast<double>(n) + 1.0;
    return m;
}

}  // namespace hzsl::testing
