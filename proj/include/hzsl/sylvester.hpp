#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hzsl/matrix.hpp"
#include "hzsl/schur.hpp"

namespace hzsl {

namespace detail {

/// In-place Gaussian elimination with partial pivoting for the d×d local
/// systems (d ≤ 4) arising from quasi-triangular back-substitution.
template <std::size_t D>
inline std::array<double, D> solve_local(std::array<std::array<double, D>, D> m,
                                         std::array<double, D> rhs) {
    for (std::size_t k = 0; k < D; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < D; ++i)
            if (std::abs(m[i][k]) > std::abs(m[piv][k])) piv = i;
        if (std::abs(m[piv][k]) <= 1e-300)
            throw numerical_error(
                "solve_sylvester: no unique solution (singular local block)");
        if (piv != k) {
            std::swap(m[piv], m[k]);
            std::swap(rhs[piv], rhs[k]);
        }
        for (std::size_t i = k + 1; i < D; ++i) {
            const double f = m[i][k] / m[k][k];
            if (f == 0.0) continue;
            for (std::size_t j = k; j < D; ++j) m[i][j] -= f * m[k][j];
            rhs[i] -= f * rhs[k];
        }
    }
    std::array<double, D> x{};
    for (std::size_t ii = D; ii-- > 0;) {
        double s = rhs[ii];
        for (std::size_t j = ii + 1; j < D; ++j) s -= m[ii][j] * x[j];
        x[ii] = s / m[ii][ii];
    }
    return x;
}

/// Solves S Y + Y T = F for quasi-upper-triangular S (m×m) and T (n×n).
/// Columns are processed left to right in T-block groups; each group is
/// resolved bottom-up over the diagonal blocks of S with direct 1x1 / 2x2 /
/// 4x4 solves, so no complex arithmetic appears.
inline Matrix solve_quasi_triangular(const Matrix& s, const Matrix& t, const Matrix& f) {
    const std::size_t m = s.rows();
    const std::size_t n = t.rows();
    Matrix y = f;

    auto row_tail = [&](std::size_t i, std::size_t col, std::size_t from) {
        double acc = 0.0;
        for (std::size_t c = from; c < m; ++c) acc += s(i, c) * y(c, col);
        return acc;
    };

    std::size_t k = 0;
    while (k < n) {
        const bool pair = (k + 1 < n) && t(k + 1, k) != 0.0;
        // fold in already-solved columns of Y via the upper part of T
        for (std::size_t j = 0; j < k; ++j) {
            const double tjk = t(j, k);
            if (tjk != 0.0)
                for (std::size_t i = 0; i < m; ++i) y(i, k) -= y(i, j) * tjk;
            if (pair) {
                const double tjk1 = t(j, k + 1);
                if (tjk1 != 0.0)
                    for (std::size_t i = 0; i < m; ++i) y(i, k + 1) -= y(i, j) * tjk1;
            }
        }

        if (!pair) {
            const double tau = t(k, k);
            std::size_t i = m;
            while (i-- > 0) {
                const bool two = (i > 0) && s(i, i - 1) != 0.0;
                if (!two) {
                    const double d = s(i, i) + tau;
                    if (std::abs(d) <= 1e-300)
                        throw numerical_error(
                            "solve_sylvester: no unique solution (zero diagonal pivot)");
                    y(i, k) = (y(i, k) - row_tail(i, k, i + 1)) / d;
                } else {
                    const double g0 = y(i - 1, k) - row_tail(i - 1, k, i + 1);
                    const double g1 = y(i, k) - row_tail(i, k, i + 1);
                    auto sol = solve_local<2>(
                        {{{s(i - 1, i - 1) + tau, s(i - 1, i)},
                          {s(i, i - 1), s(i, i) + tau}}},
                        {g0, g1});
                    y(i - 1, k) = sol[0];
                    y(i, k) = sol[1];
                    --i;
                }
            }
            k += 1;
        } else {
            const double tkk = t(k, k), tk1k = t(k + 1, k);
            const double tkk1 = t(k, k + 1), tk1k1 = t(k + 1, k + 1);
            std::size_t i = m;
            while (i-- > 0) {
                const bool two = (i > 0) && s(i, i - 1) != 0.0;
                if (!two) {
                    const double a0 = y(i, k) - row_tail(i, k, i + 1);
                    const double a1 = y(i, k + 1) - row_tail(i, k + 1, i + 1);
                    auto sol = solve_local<2>(
                        {{{s(i, i) + tkk, tk1k}, {tkk1, s(i, i) + tk1k1}}}, {a0, a1});
                    y(i, k) = sol[0];
                    y(i, k + 1) = sol[1];
                } else {
                    const double s00 = s(i - 1, i - 1), s01 = s(i - 1, i);
                    const double s10 = s(i, i - 1), s11 = s(i, i);
                    const double a0 = y(i - 1, k) - row_tail(i - 1, k, i + 1);
                    const double a1 = y(i, k) - row_tail(i, k, i + 1);
                    const double b0 = y(i - 1, k + 1) - row_tail(i - 1, k + 1, i + 1);
                    const double b1 = y(i, k + 1) - row_tail(i, k + 1, i + 1);
                    auto sol = solve_local<4>(
                        {{{s00 + tkk, s01, tk1k, 0.0},
                          {s10, s11 + tkk, 0.0, tk1k},
                          {tkk1, 0.0, s00 + tk1k1, s01},
                          {0.0, tkk1, s10, s11 + tk1k1}}},
                        {a0, a1, b0, b1});
                    y(i - 1, k) = sol[0];
                    y(i, k) = sol[1];
                    y(i - 1, k + 1) = sol[2];
                    y(i, k + 1) = sol[3];
                    --i;
                }
            }
            k += 2;
        }
    }
    return y;
}

/// Smallest |λ_A + λ_B| over the spectra read off two quasi-triangular
/// factors; the separation of the Sylvester operator from singularity.
inline double min_eigenvalue_gap(const Matrix& ta, const Matrix& tb) {
    const auto ea = schur_eigenvalues(ta);
    const auto eb = schur_eigenvalues(tb);
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& [ar, ai] : ea)
        for (const auto& [br, bi] : eb)
            gap = std::min(gap, std::hypot(ar + br, ai + bi));
    return gap;
}

}  // namespace detail

/// Solves A X + X B = C given precomputed Schur factorizations of A and B.
/// The residual is checked in the rotated frame, where it has the same
/// Frobenius norm as in the original one.
inline Matrix solve_sylvester_prefactored(const SchurForm& sa, const SchurForm& sb,
                                          const Matrix& c) {
    const std::size_t m = sa.t.rows();
    const std::size_t n = sb.t.rows();
    if (c.rows() != m || c.cols() != n)
        throw validation_error("solve_sylvester: C shape does not match A, B");

    const double gap = detail::min_eigenvalue_gap(sa.t, sb.t);
    const double gap_tol =
        std::max(1e-12, 1e-12 * (frobenius_norm(sa.t) + frobenius_norm(sb.t)));
    if (gap <= gap_tol)
        throw numerical_error(
            "solve_sylvester: no unique solution; an eigenvalue of A is within " +
            std::to_string(gap) + " of a negated eigenvalue of B");

    const Matrix f = matmul_tn(sa.q, c) * sb.q;
    const Matrix y = detail::solve_quasi_triangular(sa.t, sb.t, f);

    Matrix resid = sa.t * y + y * sb.t - f;
    const double rel = frobenius_norm(resid) / std::max(1.0, frobenius_norm(f));
    if (!(rel <= 1e-8))
        throw numerical_error(
            "solve_sylvester: residual " + std::to_string(rel) +
            " exceeds tolerance; eigenvalue gap " + std::to_string(gap));

    Matrix x = sa.q * matmul_nt(y, sb.q);
    require_finite(x, "solve_sylvester");
    return x;
}

/// Bartels-Stewart solver for A X + X B = C. Solvability (spectra of A and
/// -B disjoint) is verified a posteriori through the eigenvalue gap and the
/// relative residual ‖AX + XB − C‖_F ≤ 1e-8 · max(1, ‖C‖_F).
inline Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c) {
    if (a.rows() != a.cols() || b.rows() != b.cols())
        throw validation_error("solve_sylvester: A and B must be square");
    if (c.rows() != a.rows() || c.cols() != b.rows())
        throw validation_error("solve_sylvester: C shape does not match A, B");

    const SchurForm sa = schur_decompose(a);
    const SchurForm sb = schur_decompose(b);
    Matrix x = solve_sylvester_prefactored(sa, sb, c);

    Matrix resid = a * x + x * b - c;
    const double rel = frobenius_norm(resid) / std::max(1.0, frobenius_norm(c));
    if (!(rel <= 1e-8))
        throw numerical_error("solve_sylvester: residual " + std::to_string(rel) +
                              " exceeds tolerance after back-transform");
    return x;
}

/// Dense cross-check for the Bartels-Stewart path: assembles the
/// (mn)×(mn) operator I⊗A + Bᵀ⊗I over column-stacked vec(X) and solves it
/// with plain Gaussian elimination. Deliberately shares no code with
/// solve_sylvester beyond the Matrix type.
inline Matrix sylvester_oracle(const Matrix& a, const Matrix& b, const Matrix& c) {
    const std::size_t m = a.rows();
    const std::size_t n = b.rows();
    if (a.cols() != m || b.cols() != n)
        throw validation_error("sylvester_oracle: A and B must be square");
    if (c.rows() != m || c.cols() != n)
        throw validation_error("sylvester_oracle: C shape does not match A, B");
    if (m * n > 400)
        throw validation_error("sylvester_oracle: m*n must be at most 400");

    const std::size_t mn = m * n;
    Matrix big(mn, mn);
    Matrix rhs(mn, 1);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t r = j * m + i;
            for (std::size_t p = 0; p < m; ++p) big(r, j * m + p) += a(i, p);
            for (std::size_t l = 0; l < n; ++l) big(r, l * m + i) += b(l, j);
            rhs(r, 0) = c(i, j);
        }
    }
    Matrix flat;
    try {
        flat = solve_linear(big, rhs);
    } catch (const numerical_error&) {
        throw numerical_error("sylvester_oracle: no unique solution");
    }
    Matrix x(m, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) x(i, j) = flat(j * m + i, 0);
    return x;
}

}  // namespace hzsl
