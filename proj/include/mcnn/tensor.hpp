#pragma once

// Dense 2nd/3rd/4th-order arrays and the multilinear primitives built on them.
//
// Storage is row-major throughout: Tensor3 entry (i1, i2, i3) lives at
// (i1 * I2 + i2) * I3 + i3. All indices are zero-based; modes are 1-based
// (1, 2, 3) to match the usual mode-n notation.

#include "mcnn/error.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mcnn {

using Shape3 = std::array<std::size_t, 3>;
using Shape4 = std::array<std::size_t, 4>;

inline std::string to_string(const Shape3& s) {
    return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]);
}

inline std::string to_string(const Shape4& s) {
    return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]) +
           "x" + std::to_string(s[3]);
}

namespace detail {

template <std::size_t N>
std::size_t checked_volume(const std::array<std::size_t, N>& dims, const char* what) {
    std::size_t n = 1;
    for (auto d : dims) {
        if (d == 0) throw ArgumentError(std::string(what) + ": zero-sized dimension");
        n *= d;
    }
    return n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
        detail::checked_volume(std::array<std::size_t, 2>{rows, cols}, "Matrix");
        values_.assign(rows * cols, 0.0);
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : Matrix(rows, cols) {
        detail::require(values.size() == rows * cols, "Matrix: value count does not match shape");
        values_ = std::move(values);
    }

    /// Row-major nested initializer, e.g. Matrix::from_rows({{1, 2}, {3, 4}}).
    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        detail::require(!rows.empty() && !rows.front().empty(), "Matrix::from_rows: empty input");
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            detail::require(rows[i].size() == m.cols_, "Matrix::from_rows: ragged rows");
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    [[nodiscard]] Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    detail::require(a.cols() == b.rows(), "matmul: inner dimensions differ (" +
                                              std::to_string(a.cols()) + " vs " +
                                              std::to_string(b.rows()) + ")");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

/// Block (i, j) of the result is a(i, j) * b.
inline Matrix kronecker(const Matrix& a, const Matrix& b) {
    Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            for (std::size_t p = 0; p < b.rows(); ++p)
                for (std::size_t q = 0; q < b.cols(); ++q)
                    k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
        }
    return k;
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += v * v;
    return std::sqrt(s);
}

/// Largest |a_ij - b_ij|; shapes must agree.
inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
    return d;
}

/// max |UᵀU - I|, the orthonormal-columns residual.
inline double orthonormality_error(const Matrix& u) {
    return max_abs_diff(matmul(u.transposed(), u), Matrix::identity(u.cols()));
}

// ---------------------------------------------------------------------------
// Tensor3 / Tensor4
// ---------------------------------------------------------------------------

class Tensor3 {
public:
    explicit Tensor3(const Shape3& dims) : dims_(dims) {
        values_.assign(detail::checked_volume(dims, "Tensor3"), 0.0);
    }

    Tensor3(const Shape3& dims, std::vector<double> values) : Tensor3(dims) {
        detail::require(values.size() == values_.size(),
                        "Tensor3: value count does not match " + to_string(dims));
        values_ = std::move(values);
    }

    [[nodiscard]] const Shape3& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t dim(int mode) const {
        detail::require(mode >= 1 && mode <= 3, "Tensor3::dim: mode must be 1, 2 or 3");
        return dims_[static_cast<std::size_t>(mode - 1)];
    }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] std::size_t offset(std::size_t i1, std::size_t i2, std::size_t i3) const noexcept {
        return (i1 * dims_[1] + i2) * dims_[2] + i3;
    }
    double& operator()(std::size_t i1, std::size_t i2, std::size_t i3) {
        return values_[offset(i1, i2, i3)];
    }
    double operator()(std::size_t i1, std::size_t i2, std::size_t i3) const {
        return values_[offset(i1, i2, i3)];
    }

    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    bool operator==(const Tensor3&) const = default;

private:
    Shape3 dims_;
    std::vector<double> values_;
};

/// Multi-channel volume: (x, y, z, channel), row-major, channel fastest.
class Tensor4 {
public:
    explicit Tensor4(const Shape4& dims) : dims_(dims) {
        values_.assign(detail::checked_volume(dims, "Tensor4"), 0.0);
    }

    Tensor4(const Shape4& dims, std::vector<double> values) : Tensor4(dims) {
        detail::require(values.size() == values_.size(),
                        "Tensor4: value count does not match " + to_string(dims));
        values_ = std::move(values);
    }

    /// Single-channel view of a Tensor3 (copy).
    static Tensor4 from_tensor3(const Tensor3& t) {
        const auto& d = t.dims();
        return Tensor4({d[0], d[1], d[2], 1},
                       std::vector<double>(t.values().begin(), t.values().end()));
    }

    [[nodiscard]] const Shape4& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] std::size_t offset(std::size_t x, std::size_t y, std::size_t z,
                                     std::size_t c) const noexcept {
        return ((x * dims_[1] + y) * dims_[2] + z) * dims_[3] + c;
    }
    double& operator()(std::size_t x, std::size_t y, std::size_t z, std::size_t c) {
        return values_[offset(x, y, z, c)];
    }
    double operator()(std::size_t x, std::size_t y, std::size_t z, std::size_t c) const {
        return values_[offset(x, y, z, c)];
    }

    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    bool operator==(const Tensor4&) const = default;

private:
    Shape4 dims_;
    std::vector<double> values_;
};

inline double frobenius_norm(const Tensor3& t) {
    double s = 0.0;
    for (double v : t.values()) s += v * v;
    return std::sqrt(s);
}

inline Tensor3 operator-(const Tensor3& a, const Tensor3& b) {
    detail::require(a.dims() == b.dims(), "Tensor3 subtraction: shape mismatch");
    Tensor3 r(a.dims());
    for (std::size_t i = 0; i < r.size(); ++i) r.values()[i] = a.values()[i] - b.values()[i];
    return r;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Kiers matricization
//
//   X_(1) = [X_{::1}, ..., X_{::I3}]         I1 x I2*I3, column i2 + I2*i3
//   X_(2) = [X_{1::}^T, ..., X_{I1::}^T]     I2 x I3*I1, column i3 + I3*i1
//   X_(3) = [X_{:1:}^T, ..., X_{:I2:}^T]     I3 x I1*I2, column i1 + I1*i2
//
// i.e. the column index cycles through the remaining modes starting after n.
// This is the ordering under which X_(1) (U3 ⊗ U2), X_(2) (U1 ⊗ U3) and
// X_(3) (U2 ⊗ U1) contract the correct index pairs.
// ---------------------------------------------------------------------------

struct UnfoldIndex {
    std::size_t row;
    std::size_t col;
};

/// The single source of truth for the Kiers slice ordering.
inline UnfoldIndex kiers_index(int mode, const Shape3& dims, std::size_t i1, std::size_t i2,
                               std::size_t i3) {
    switch (mode) {
        case 1: return {i1, i2 + dims[1] * i3};
        case 2: return {i2, i3 + dims[2] * i1};
        case 3: return {i3, i1 + dims[0] * i2};
        default: throw ArgumentError("matricization mode must be 1, 2 or 3");
    }
}

inline std::pair<std::size_t, std::size_t> unfolded_shape(int mode, const Shape3& dims) {
    detail::require(mode >= 1 && mode <= 3, "matricization mode must be 1, 2 or 3");
    const std::size_t n = dims[static_cast<std::size_t>(mode - 1)];
    return {n, dims[0] * dims[1] * dims[2] / n};
}

inline Matrix matricize(const Tensor3& t, int mode) {
    const auto [rows, cols] = unfolded_shape(mode, t.dims());
    Matrix m(rows, cols);
    const auto& d = t.dims();
    for (std::size_t i1 = 0; i1 < d[0]; ++i1)
        for (std::size_t i2 = 0; i2 < d[1]; ++i2)
            for (std::size_t i3 = 0; i3 < d[2]; ++i3) {
                const auto idx = kiers_index(mode, d, i1, i2, i3);
                m(idx.row, idx.col) = t(i1, i2, i3);
            }
    return m;
}

inline Tensor3 dematricize(const Matrix& m, int mode, const Shape3& dims) {
    detail::checked_volume(dims, "dematricize");
    const auto [rows, cols] = unfolded_shape(mode, dims);
    if (m.rows() != rows || m.cols() != cols)
        throw ArgumentError("dematricize: expected " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " matrix for mode " + std::to_string(mode) +
                            " of " + to_string(dims) + ", got " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
    Tensor3 t(dims);
    for (std::size_t i1 = 0; i1 < dims[0]; ++i1)
        for (std::size_t i2 = 0; i2 < dims[1]; ++i2)
            for (std::size_t i3 = 0; i3 < dims[2]; ++i3) {
                const auto idx = kiers_index(mode, dims, i1, i2, i3);
                t(i1, i2, i3) = m(idx.row, idx.col);
            }
    return t;
}

/// t ×_n u with u of shape (J × I_n): out(.., j, ..) = Σ_i u(j, i) t(.., i, ..).
inline Tensor3 mode_n_product(const Tensor3& t, const Matrix& u, int mode) {
    detail::require(mode >= 1 && mode <= 3, "mode_n_product: mode must be 1, 2 or 3");
    const std::size_t n = static_cast<std::size_t>(mode - 1);
    const auto& d = t.dims();
    if (u.cols() != d[n])
        throw ArgumentError("mode_n_product: matrix has " + std::to_string(u.cols()) +
                            " columns but mode-" + std::to_string(mode) + " size is " +
                            std::to_string(d[n]));
    Shape3 od = d;
    od[n] = u.rows();
    Tensor3 out(od);

    // View t as (outer, I_n, inner) and contract the middle axis.
    std::size_t outer = 1, inner = 1;
    for (std::size_t k = 0; k < n; ++k) outer *= d[k];
    for (std::size_t k = n + 1; k < 3; ++k) inner *= d[k];
    const std::size_t in_n = d[n], out_n = u.rows();
    auto src = t.values();
    auto dst = out.values();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < out_n; ++j) {
            double* drow = dst.data() + (o * out_n + j) * inner;
            for (std::size_t i = 0; i < in_n; ++i) {
                const double w = u(j, i);
                if (w == 0.0) continue;
                const double* srow = src.data() + (o * in_n + i) * inner;
                for (std::size_t k = 0; k < inner; ++k) drow[k] += w * srow[k];
            }
        }
    return out;
}

}  // namespace mcnn
