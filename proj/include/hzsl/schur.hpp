#pragma once

#include <array>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hzsl/matrix.hpp"

namespace hzsl {

/// Real Schur factorization A = Q T Qᵀ with Q orthogonal and T
/// quasi-upper-triangular: 1x1 diagonal blocks for real eigenvalues and
/// 2x2 diagonal blocks only for complex-conjugate eigenpairs.
struct SchurForm {
    Matrix q;
    Matrix t;
};

namespace detail {

inline double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

/// Householder reduction to upper Hessenberg form; Q accumulates the
/// reflectors so that Q H Qᵀ equals the original matrix.
inline void hessenberg_reduce(Matrix& h, Matrix& q) {
    const std::size_t n = h.rows();
    if (n < 3) return;
    std::vector<double> u(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const std::size_t m = n - k - 1;  // length of the column tail
        double xnorm = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            u[i] = h(k + 1 + i, k);
            xnorm += u[i] * u[i];
        }
        xnorm = std::sqrt(xnorm);
        if (xnorm == 0.0) continue;
        const double alpha = -sign_of(u[0]) * xnorm;
        u[0] -= alpha;
        double unorm = 0.0;
        for (std::size_t i = 0; i < m; ++i) unorm += u[i] * u[i];
        unorm = std::sqrt(unorm);
        if (unorm == 0.0) continue;
        for (std::size_t i = 0; i < m; ++i) u[i] /= unorm;

        // left: rows k+1..n-1
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += u[i] * h(k + 1 + i, j);
            s *= 2.0;
            for (std::size_t i = 0; i < m; ++i) h(k + 1 + i, j) -= s * u[i];
        }
        // right: columns k+1..n-1
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += u[j] * h(i, k + 1 + j);
            s *= 2.0;
            for (std::size_t j = 0; j < m; ++j) h(i, k + 1 + j) -= s * u[j];
        }
        // accumulate Q on the right
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += u[j] * q(i, k + 1 + j);
            s *= 2.0;
            for (std::size_t j = 0; j < m; ++j) q(i, k + 1 + j) -= s * u[j];
        }
        h(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

/// One implicit double-shift sweep on the unreduced block [lo, hi].
/// s_sum and s_prod are the trace and determinant of the shift pair.
inline void francis_sweep(Matrix& h, Matrix& q, std::size_t lo, std::size_t hi,
                          double s_sum, double s_prod) {
    const std::size_t n = h.rows();
    double p = h(lo, lo) * h(lo, lo) + h(lo, lo + 1) * h(lo + 1, lo) -
               s_sum * h(lo, lo) + s_prod;
    double r = h(lo + 1, lo) * (h(lo, lo) + h(lo + 1, lo + 1) - s_sum);
    double w = h(lo + 1, lo) * h(lo + 2, lo + 1);

    for (std::size_t k = lo; k < hi; ++k) {
        const bool last = (k == hi - 1);
        if (k > lo) {
            p = h(k, k - 1);
            r = h(k + 1, k - 1);
            w = last ? 0.0 : h(k + 2, k - 1);
        } else if (last) {
            w = 0.0;
        }
        const double scale = std::abs(p) + std::abs(r) + std::abs(w);
        if (scale == 0.0) continue;
        const double ps = p / scale, rs = r / scale, ws = w / scale;
        const double s = sign_of(ps) * std::sqrt(ps * ps + rs * rs + ws * ws);
        if (s == 0.0) continue;
        std::array<double, 3> u{ps + s, rs, ws};
        double unorm = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
        if (unorm == 0.0) continue;
        for (double& v : u) v /= unorm;
        const std::size_t span = last ? 2 : 3;

        if (k > lo) {
            h(k, k - 1) = -s * scale;
            h(k + 1, k - 1) = 0.0;
            if (!last) h(k + 2, k - 1) = 0.0;
        }
        // left: rows k..k+span-1, columns k..n-1
        for (std::size_t j = k; j < n; ++j) {
            double d = 0.0;
            for (std::size_t i = 0; i < span; ++i) d += u[i] * h(k + i, j);
            d *= 2.0;
            for (std::size_t i = 0; i < span; ++i) h(k + i, j) -= d * u[i];
        }
        // right: columns k..k+span-1, rows 0..min(k+3, hi)
        const std::size_t rend = std::min(k + 3, hi);
        for (std::size_t i = 0; i <= rend; ++i) {
            double d = 0.0;
            for (std::size_t j = 0; j < span; ++j) d += u[j] * h(i, k + j);
            d *= 2.0;
            for (std::size_t j = 0; j < span; ++j) h(i, k + j) -= d * u[j];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double d = 0.0;
            for (std::size_t j = 0; j < span; ++j) d += u[j] * q(i, k + j);
            d *= 2.0;
            for (std::size_t j = 0; j < span; ++j) q(i, k + j) -= d * u[j];
        }
    }
}

/// Rotates a converged 2x2 diagonal block with real eigenvalues into two
/// 1x1 blocks; complex-conjugate blocks are left in place.
inline void finalize_block_2x2(Matrix& h, Matrix& q, std::size_t i) {
    const std::size_t n = h.rows();
    const double a = h(i, i), b = h(i, i + 1);
    const double c = h(i + 1, i), d = h(i + 1, i + 1);
    if (c == 0.0) return;
    const double half = 0.5 * (a - d);
    const double disc = half * half + b * c;
    if (disc < 0.0) return;  // complex pair stays as a 2x2 block

    const double lam = 0.5 * (a + d) + sign_of(half) * std::sqrt(disc);
    // (lam - d, c) is an eigenvector; |lam - d| = |half| + sqrt(disc) keeps it
    // well away from zero.
    double v0 = lam - d, v1 = c;
    const double vn = std::sqrt(v0 * v0 + v1 * v1);
    v0 /= vn;
    v1 /= vn;
    for (std::size_t j = i; j < n; ++j) {  // rows i, i+1 from the left
        const double t0 = h(i, j), t1 = h(i + 1, j);
        h(i, j) = v0 * t0 + v1 * t1;
        h(i + 1, j) = -v1 * t0 + v0 * t1;
    }
    for (std::size_t r = 0; r <= i + 1; ++r) {  // columns i, i+1 from the right
        const double t0 = h(r, i), t1 = h(r, i + 1);
        h(r, i) = v0 * t0 + v1 * t1;
        h(r, i + 1) = -v1 * t0 + v0 * t1;
    }
    for (std::size_t r = 0; r < n; ++r) {
        const double t0 = q(r, i), t1 = q(r, i + 1);
        q(r, i) = v0 * t0 + v1 * t1;
        q(r, i + 1) = -v1 * t0 + v0 * t1;
    }
    h(i + 1, i) = 0.0;
}

}  // namespace detail

/// Real Schur decomposition by Hessenberg reduction followed by Francis
/// double-shift QR iteration. The sweep budget is 30·n across the whole
/// matrix; running out is reported as an error rather than returning a
/// partially converged factorization.
inline SchurForm schur_decompose(const Matrix& a) {
    const std::size_t n = a.rows();
    if (n == 0 || a.cols() != n)
        throw validation_error("schur_decompose: matrix must be square and non-empty");
    if (!a.all_finite())
        throw validation_error("schur_decompose: non-finite entries");

    Matrix h = a;
    Matrix q = Matrix::identity(n);
    if (n == 1) return {q, h};

    detail::hessenberg_reduce(h, q);

    const double hnorm = frobenius_norm(h);
    const double eps = 2.0 * DBL_EPSILON;
    const std::size_t budget = 30 * n;
    std::size_t sweeps = 0;
    std::size_t stuck = 0;  // sweeps since the last deflation at the current tail

    std::size_t hi = n - 1;
    while (hi > 0) {
        // Deflation scan: find the top of the trailing unreduced block.
        // The global-norm floor matters for clustered tiny eigenvalues,
        // where subdiagonals stall at rounding level relative to ‖A‖ while
        // staying large relative to the local diagonal entries.
        std::size_t lo = hi;
        while (lo > 0) {
            const double s = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
            if (std::abs(h(lo, lo - 1)) <= eps * std::max(s, hnorm)) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi) {
            --hi;
            stuck = 0;
            continue;
        }
        if (lo + 1 == hi) {
            detail::finalize_block_2x2(h, q, lo);
            hi = lo == 0 ? 0 : lo - 1;
            stuck = 0;
            continue;
        }
        if (sweeps >= budget)
            throw numerical_error(
                "schur_decompose: QR iteration exceeded its budget of 30n sweeps "
                "(n = " + std::to_string(n) + "); input may be degenerate");
        ++sweeps;
        ++stuck;

        double s_sum, s_prod;
        if (stuck % 10 == 0) {
            // exceptional shift after stagnation
            const double s = std::abs(h(hi, hi - 1)) + std::abs(h(hi - 1, hi - 2));
            const double h11 = 0.75 * s + h(hi, hi);
            const double h12 = -0.4375 * s;
            const double h21 = s;
            s_sum = h11 + h11;
            s_prod = h11 * h11 - h12 * h21;
        } else {
            s_sum = h(hi - 1, hi - 1) + h(hi, hi);
            s_prod = h(hi - 1, hi - 1) * h(hi, hi) - h(hi - 1, hi) * h(hi, hi - 1);
        }
        detail::francis_sweep(h, q, lo, hi, s_sum, s_prod);
    }

    for (std::size_t i = 2; i < n; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j) h(i, j) = 0.0;

    if (!h.all_finite() || !q.all_finite())
        throw numerical_error("schur_decompose: non-finite result");
    return {q, h};
}

/// Eigenvalues read off a quasi-triangular T as (real, imag) pairs.
inline std::vector<std::pair<double, double>> schur_eigenvalues(const Matrix& t) {
    std::vector<std::pair<double, double>> ev;
    const std::size_t n = t.rows();
    std::size_t i = 0;
    while (i < n) {
        if (i + 1 < n && t(i + 1, i) != 0.0) {
            const double half = 0.5 * (t(i, i) - t(i + 1, i + 1));
            const double disc = half * half + t(i, i + 1) * t(i + 1, i);
            const double re = 0.5 * (t(i, i) + t(i + 1, i + 1));
            const double im = disc < 0.0 ? std::sqrt(-disc) : 0.0;
            ev.emplace_back(re, im);
            ev.emplace_back(re, -im);
            i += 2;
        } else {
            ev.emplace_back(t(i, i), 0.0);
            i += 1;
        }
    }
    return ev;
}

}  // namespace hzsl
