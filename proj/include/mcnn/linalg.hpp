#pragma once

// Truncated SVD by one-sided (Hestenes) Jacobi, and orthonormal initialization.

#include "mcnn/error.hpp"
#include "mcnn/random.hpp"
#include "mcnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace mcnn {

struct TruncatedSVD {
    Matrix u;               // m x r, orthonormal columns
    std::vector<double> s;  // r singular values, non-increasing
    Matrix v;               // n x r, orthonormal columns
};

struct JacobiOptions {
    double tolerance = 1e-12;    // max normalized column inner product
    std::size_t max_sweeps = 10000;
};

namespace detail {

/// Column j of `m` made orthonormal to columns [0, j) by two passes of
/// Gram-Schmidt, seeded with successive unit vectors until one survives.
inline void complete_column(Matrix& m, std::size_t j) {
    const std::size_t rows = m.rows();
    for (std::size_t e = 0; e < rows; ++e) {
        std::vector<double> c(rows, 0.0);
        c[(e + j) % rows] = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < j; ++k) {
                double dot = 0.0;
                for (std::size_t i = 0; i < rows; ++i) dot += m(i, k) * c[i];
                for (std::size_t i = 0; i < rows; ++i) c[i] -= dot * m(i, k);
            }
        double norm = 0.0;
        for (double x : c) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0.5) {
            for (std::size_t i = 0; i < rows; ++i) m(i, j) = c[i] / norm;
            return;
        }
    }
    throw NumericError("complete_column: could not extend orthonormal basis", j);
}

/// Full one-sided Jacobi on a tall matrix (rows >= cols). Returns the
/// unsorted column-orthogonalized work matrix W = A V and V itself.
inline std::pair<Matrix, Matrix> hestenes(const Matrix& a, const JacobiOptions& opt) {
    const std::size_t m = a.rows(), n = a.cols();
    Matrix w = a;
    Matrix v = Matrix::identity(n);
    for (std::size_t sweep = 0;; ++sweep) {
        if (sweep >= opt.max_sweeps)
            throw NumericError("truncated_svd: Jacobi sweeps did not converge", sweep);
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if (gamma == 0.0 || std::abs(gamma) <= opt.tolerance * std::sqrt(alpha * beta))
                    continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        if (!rotated) break;
    }
    return {std::move(w), std::move(v)};
}

/// SVD of a tall matrix, truncated to r.
inline TruncatedSVD svd_tall(const Matrix& a, std::size_t r, const JacobiOptions& opt) {
    const std::size_t m = a.rows(), n = a.cols();
    auto [w, v] = hestenes(a, opt);

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += w(i, j) * w(i, j);
        norms[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

    const double smax = norms[order[0]];
    const double negligible = smax * 1e-13 * static_cast<double>(std::max(m, n));

    TruncatedSVD out{Matrix(m, r), std::vector<double>(r), Matrix(n, r)};
    for (std::size_t k = 0; k < r; ++k) {
        const std::size_t j = order[k];
        const double sigma = norms[j];
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
        if (sigma > negligible && sigma > 0.0) {
            out.s[k] = sigma;
            for (std::size_t i = 0; i < m; ++i) out.u(i, k) = w(i, j) / sigma;
        } else {
            // Numerically null direction: u is any unit vector orthogonal to the rest.
            out.s[k] = sigma;
            complete_column(out.u, k);
        }
    }
    return out;
}

}  // namespace detail

/// Rank-r truncated SVD. Each left singular vector is signed so that its
/// largest-magnitude entry (first on ties) is non-negative; v follows u.
inline TruncatedSVD truncated_svd(const Matrix& a, std::size_t r, const JacobiOptions& opt = {}) {
    const std::size_t k = std::min(a.rows(), a.cols());
    if (r == 0 || r > k)
        throw ArgumentError("truncated_svd: rank " + std::to_string(r) + " outside [1, " +
                            std::to_string(k) + "]");

    TruncatedSVD out = [&] {
        if (a.rows() >= a.cols()) return detail::svd_tall(a, r, opt);
        TruncatedSVD t = detail::svd_tall(a.transposed(), r, opt);
        return TruncatedSVD{std::move(t.v), std::move(t.s), std::move(t.u)};
    }();

    for (std::size_t j = 0; j < r; ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < out.u.rows(); ++i)
            if (std::abs(out.u(i, j)) > std::abs(out.u(arg, j))) arg = i;
        if (out.u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < out.u.rows(); ++i) out.u(i, j) = -out.u(i, j);
            for (std::size_t i = 0; i < out.v.rows(); ++i) out.v(i, j) = -out.v(i, j);
        }
    }
    return out;
}

/// u · diag(s) · vᵀ
inline Matrix reconstruct(const TruncatedSVD& svd) {
    Matrix us = svd.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= svd.s[j];
    return matmul(us, svd.v.transposed());
}

/// Gaussian matrix orthonormalized column by column (modified Gram-Schmidt,
/// two passes). Deterministic for a fixed seed.
inline Matrix orthonormal_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    if (cols > rows)
        throw ArgumentError("orthonormal_init: cols (" + std::to_string(cols) +
                            ") exceeds rows (" + std::to_string(rows) + ")");
    Rng rng(seed);
    Matrix q(rows, cols);
    for (double& x : q.values()) x = rng.normal();
    for (std::size_t j = 0; j < cols; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < j; ++k) {
                double dot = 0.0;
                for (std::size_t i = 0; i < rows; ++i) dot += q(i, k) * q(i, j);
                for (std::size_t i = 0; i < rows; ++i) q(i, j) -= dot * q(i, k);
            }
        double norm = 0.0;
        for (std::size_t i = 0; i < rows; ++i) norm += q(i, j) * q(i, j);
        norm = std::sqrt(norm);
        if (norm < 1e-8) {
            detail::complete_column(q, j);
            continue;
        }
        for (std::size_t i = 0; i < rows; ++i) q(i, j) /= norm;
    }
    return q;
}

}  // namespace mcnn
