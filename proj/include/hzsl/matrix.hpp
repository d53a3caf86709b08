#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "hzsl/common.hpp"

namespace hzsl {

/// Dense real matrix, 64-bit entries in row-major order.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}

    /// Row-major construction from nested braces, for tests and fixtures.
    Matrix(std::initializer_list<std::initializer_list<double>> rows_init) {
        rows_ = rows_init.size();
        cols_ = rows_ == 0 ? 0 : rows_init.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows_init) {
            if (r.size() != cols_) throw validation_error("Matrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    Matrix& operator+=(const Matrix& other) {
        require_same_shape(other, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    Matrix& operator-=(const Matrix& other) {
        require_same_shape(other, "-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
        return *this;
    }

    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    void require_same_shape(const Matrix& other, const char* op) const {
        if (!same_shape(other))
            throw validation_error(std::string("Matrix: shape mismatch in ") + op);
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
inline Matrix operator*(Matrix a, double s) { return a *= s; }
inline Matrix operator*(double s, Matrix a) { return a *= s; }

/// a * b with i-k-j loop order (row-major friendly).
inline Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw validation_error("Matrix: shape mismatch in product");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.data() + k * b.cols();
            double* crow = c.data() + i * b.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// aᵀ * b without forming the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw validation_error("matmul_tn: shape mismatch");
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* arow = a.data() + k * a.cols();
        const double* brow = b.data() + k * b.cols();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.data() + i * b.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

/// a * bᵀ without forming the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw validation_error("matmul_nt: shape mismatch");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.data() + i * a.cols();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.data() + j * b.cols();
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
            c(i, j) = s;
        }
    }
    return c;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    const double* p = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) s += p[i] * p[i];
    return std::sqrt(s);
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    const double* p = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(p[i]));
    return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw validation_error("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Scales every row to unit Euclidean norm. Zero rows are an error: the
/// pipeline uses cosine geometry and a zero row has no direction.
inline void l2_normalize_rows(Matrix& m, const char* what = "matrix") {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        const double n = norm2(r);
        if (n <= 0.0)
            throw validation_error(std::string(what) + ": zero-norm row " + std::to_string(i));
        for (double& v : r) v /= n;
    }
}

inline Matrix l2_normalized_rows(Matrix m, const char* what = "matrix") {
    l2_normalize_rows(m, what);
    return m;
}

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.all_finite())
        throw numerical_error(std::string(what) + ": non-finite entries");
}

/// Solves the dense system a * x = b by Gaussian elimination with partial
/// pivoting; b may carry multiple right-hand sides as columns.
inline Matrix solve_linear(Matrix a, Matrix b) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw validation_error("solve_linear: matrix not square");
    if (b.rows() != n) throw validation_error("solve_linear: rhs row mismatch");
    const double scale = std::max(1.0, max_abs(a));
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (std::abs(a(piv, k)) <= 1e-13 * scale)
            throw numerical_error("solve_linear: singular system (no unique solution)");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
            for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
        }
    }
    Matrix x(n, b.cols());
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = b(ii, j);
            for (std::size_t k = ii + 1; k < n; ++k) s -= a(ii, k) * x(k, j);
            x(ii, j) = s / a(ii, ii);
        }
    }
    return x;
}

}  // namespace hzsl
