#pragma once

// Mapping layers: three fixed mode-n projections whose kernels are the
// Tucker factors of the averaged training patch, fitted by alternating
// least squares (higher-order orthogonal iteration).

#include "mcnn/error.hpp"
#include "mcnn/linalg.hpp"
#include "mcnn/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mcnn {

struct FitOptions {
    double tolerance = 0.01;      // stop once ||G^{t-1} - G^t||_F <= tolerance
    std::size_t max_iters = 100;
};

/// Per-iteration diagnostics. Index 0 describes the initial factors.
struct FitTrace {
    std::vector<double> core_deltas;            // [t] = ||G^{t-1} - G^t||_F, t >= 1
    std::vector<double> reconstruction_errors;  // [t] = ||X - G^t x1 U1 x2 U2 x3 U3||_F
};

struct MappingStack {
    Matrix u1;  // I1 x R1
    Matrix u2;  // I2 x R2
    Matrix u3;  // I3 x R3
    Shape3 input_dims;
    Shape3 ranks;
    std::uint64_t seed = 0;
    std::size_t iterations_used = 0;
    double final_core_delta = 0.0;
    bool converged = true;
    FitTrace trace;  // not persisted

    [[nodiscard]] const Matrix& factor(int mode) const {
        switch (mode) {
            case 1: return u1;
            case 2: return u2;
            case 3: return u3;
            default: throw ArgumentError("MappingStack::factor: mode must be 1, 2 or 3");
        }
    }
};

inline Tensor3 average_patch(std::span<const Tensor3> patches) {
    detail::require(!patches.empty(), "average_patch: no patches");
    const Shape3 dims = patches.front().dims();
    Tensor3 mean(dims);
    for (const auto& p : patches) {
        detail::require(p.dims() == dims, "average_patch: patch " + to_string(p.dims()) +
                                              " differs from " + to_string(dims));
        for (std::size_t i = 0; i < mean.size(); ++i) mean.values()[i] += p.values()[i];
    }
    const double inv = 1.0 / static_cast<double>(patches.size());
    for (double& v : mean.values()) v *= inv;
    return mean;
}

/// x ×1 U1ᵀ ×2 U2ᵀ ×3 U3ᵀ (core extraction).
inline Tensor3 project(const Tensor3& x, const Matrix& u1, const Matrix& u2, const Matrix& u3) {
    return mode_n_product(
        mode_n_product(mode_n_product(x, u1.transposed(), 1), u2.transposed(), 2),
        u3.transposed(), 3);
}

/// g ×1 U1 ×2 U2 ×3 U3 (Tucker reconstruction).
inline Tensor3 reconstruct(const Tensor3& g, const Matrix& u1, const Matrix& u2, const Matrix& u3) {
    return mode_n_product(mode_n_product(mode_n_product(g, u1, 1), u2, 2), u3, 3);
}

inline Tensor3 project(const MappingStack& stack, const Tensor3& x) {
    if (x.dims() != stack.input_dims)
        throw ArgumentError("project: patch " + to_string(x.dims()) + " does not match mapping input " +
                            to_string(stack.input_dims));
    return project(x, stack.u1, stack.u2, stack.u3);
}

inline Tensor3 reconstruct(const MappingStack& stack, const Tensor3& g) {
    if (g.dims() != stack.ranks)
        throw ArgumentError("reconstruct: core " + to_string(g.dims()) + " does not match ranks " +
                            to_string(stack.ranks));
    return reconstruct(g, stack.u1, stack.u2, stack.u3);
}

/// ||project(x)||² / ||x||², in [0, 1] for orthonormal factors.
inline double energy_retained(const MappingStack& stack, const Tensor3& x) {
    const double total = frobenius_norm(x);
    if (total == 0.0) throw ArgumentError("energy_retained: zero-norm input");
    const double kept = frobenius_norm(project(stack, x));
    return std::min(1.0, (kept * kept) / (total * total));
}

/// Mapping with identity kernels: input passes through unchanged.
inline MappingStack identity_stack(const Shape3& dims) {
    return MappingStack{Matrix::identity(dims[0]), Matrix::identity(dims[1]),
                        Matrix::identity(dims[2]), dims, dims, 0, 0, 0.0, true, {}};
}

inline void validate_ranks(const Shape3& dims, const Shape3& ranks) {
    for (std::size_t n = 0; n < 3; ++n)
        if (ranks[n] == 0 || ranks[n] > dims[n])
            throw ArgumentError("ranks " + to_string(ranks) + " invalid for patch " +
                                to_string(dims));
}

/// ALS on a single tensor. The loop runs while the core changes by more than
/// the tolerance; the stack comes back flagged non-converged if the cap hits.
inline MappingStack fit_tensor(const Tensor3& x, const Shape3& ranks, std::uint64_t seed,
                               const FitOptions& opt = {}) {
    validate_ranks(x.dims(), ranks);
    detail::require(opt.tolerance > 0.0, "fit: tolerance must be positive");
    detail::require(opt.max_iters > 0, "fit: max_iters must be positive");
    const Shape3& dims = x.dims();

    MappingStack st{orthonormal_init(dims[0], ranks[0], seed),
                    orthonormal_init(dims[1], ranks[1], seed + 1),
                    orthonormal_init(dims[2], ranks[2], seed + 2),
                    dims,
                    ranks,
                    seed,
                    0,
                    0.0,
                    true,
                    {}};

    const Matrix x1 = matricize(x, 1);
    const Matrix x2 = matricize(x, 2);
    const Matrix x3 = matricize(x, 3);

    Tensor3 core = project(x, st.u1, st.u2, st.u3);
    st.trace.reconstruction_errors.push_back(
        frobenius_norm(x - reconstruct(core, st.u1, st.u2, st.u3)));

    st.converged = false;
    for (std::size_t t = 1; t <= opt.max_iters; ++t) {
        st.u1 = truncated_svd(matmul(x1, kronecker(st.u3, st.u2)), ranks[0]).u;
        st.u2 = truncated_svd(matmul(x2, kronecker(st.u1, st.u3)), ranks[1]).u;
        st.u3 = truncated_svd(matmul(x3, kronecker(st.u2, st.u1)), ranks[2]).u;

        Tensor3 next = project(x, st.u1, st.u2, st.u3);
        const double delta = frobenius_norm(core - next);
        core = std::move(next);

        st.trace.core_deltas.push_back(delta);
        st.trace.reconstruction_errors.push_back(
            frobenius_norm(x - reconstruct(core, st.u1, st.u2, st.u3)));
        st.iterations_used = t;
        st.final_core_delta = delta;
        if (delta <= opt.tolerance) {
            st.converged = true;
            break;
        }
    }
    return st;
}

/// Fits the three mapping kernels on the mean of the training patches.
inline MappingStack fit(std::span<const Tensor3> patches, const Shape3& ranks, std::uint64_t seed,
                        const FitOptions& opt = {}) {
    return fit_tensor(average_patch(patches), ranks, seed, opt);
}

// ---------------------------------------------------------------------------
// Multiplication counts for K patches of size M x N x Z.
// ---------------------------------------------------------------------------

/// One decomposition of the averaged patch: (MN)²Z + (ZN)²M + (MZ)²N.
constexpr double mapping_fit_multiplications(double m, double n, double z) {
    return (m * n) * (m * n) * z + (z * n) * (z * n) * m + (m * z) * (m * z) * n;
}

/// Independent decomposition of every patch: (MZ + MN + ZN) MNZ K.
constexpr double per_patch_td_multiplications(double m, double n, double z, double k) {
    return (m * z + m * n + z * n) * m * n * z * k;
}

/// PCA over the K·MN spectra: Z² K M N.
constexpr double pca_multiplications(double m, double n, double z, double k) {
    return z * z * k * m * n;
}

}  // namespace mcnn
