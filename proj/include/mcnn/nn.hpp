#pragma once

// Trainable layers with explicit forward/backward passes.
//
// Volumes are Tensor4 (x, y, z, channel). Convolution is a cross-correlation
// over the three axes summed over input channels; "same" padding pads the two
// spatial axes only, the spectral axis is always valid.

#include "mcnn/error.hpp"
#include "mcnn/random.hpp"
#include "mcnn/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mcnn {

using Extent3 = std::array<std::size_t, 3>;

inline std::string to_string(const Extent3& e, char sep) {
    return std::to_string(e[0]) + sep + std::to_string(e[1]) + sep + std::to_string(e[2]);
}

enum class Padding { valid, same };
enum class Activation { identity, relu };

/// Trainable values of one layer plus Adam moments.
struct LayerParams {
    std::vector<double> values;
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;

    explicit LayerParams(std::size_t n = 0) : values(n, 0.0), m(n, 0.0), v(n, 0.0) {}
    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

inline std::vector<double> gaussian_init(std::size_t n, double stddev, std::uint64_t seed) {
    detail::require(stddev > 0.0, "gaussian_init: stddev must be positive");
    Rng rng(seed);
    std::vector<double> out(n);
    for (double& x : out) x = rng.normal(0.0, stddev);
    return out;
}

// ---------------------------------------------------------------------------
// Activations and loss
// ---------------------------------------------------------------------------

inline void relu_forward(std::span<double> x) {
    for (double& v : x) v = v > 0.0 ? v : 0.0;
}

/// Gradient through ReLU given its output; the subgradient at 0 is 0.
inline void relu_backward(std::span<const double> y, std::span<double> grad) {
    detail::require(y.size() == grad.size(), "relu_backward: size mismatch");
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!(y[i] > 0.0)) grad[i] = 0.0;
}

inline void apply_activation(Activation a, std::span<double> x) {
    if (a == Activation::relu) relu_forward(x);
}

inline void activation_backward(Activation a, std::span<const double> y, std::span<double> grad) {
    if (a == Activation::relu) relu_backward(y, grad);
}

inline std::vector<double> softmax(std::span<const double> logits) {
    detail::require(!logits.empty(), "softmax: empty logits");
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
    for (double& x : p) x /= z;
    return p;
}

struct LossGrad {
    double loss;
    std::vector<double> grad;  // d loss / d logits
};

inline LossGrad softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size())
        throw ArgumentError("softmax_cross_entropy: label " + std::to_string(label) +
                            " out of range for " + std::to_string(logits.size()) + " classes");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double log_z = std::log(z) + mx;
    LossGrad out{log_z - logits[label], std::vector<double>(logits.size())};
    for (std::size_t i = 0; i < logits.size(); ++i) out.grad[i] = std::exp(logits[i] - log_z);
    out.grad[label] -= 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Shared window geometry
// ---------------------------------------------------------------------------

namespace detail {

struct AxisGeometry {
    std::size_t pad_lo = 0;
    std::size_t out = 0;
};

/// floor((D + pad - K) / S) + 1; zero output means the window does not fit.
inline AxisGeometry axis_geometry(std::size_t in, std::size_t k, std::size_t s, bool pad) {
    AxisGeometry g;
    const std::size_t total_pad = pad ? k - 1 : 0;
    g.pad_lo = total_pad / 2;
    const std::size_t padded = in + total_pad;
    g.out = padded < k ? 0 : (padded - k) / s + 1;
    return g;
}

inline std::array<AxisGeometry, 3> window_geometry(const Shape4& in, const Extent3& k,
                                                   const Extent3& s, Padding padding,
                                                   const std::string& who) {
    std::array<AxisGeometry, 3> g;
    for (std::size_t a = 0; a < 3; ++a) {
        g[a] = axis_geometry(in[a], k[a], s[a], padding == Padding::same && a < 2);
        if (g[a].out == 0)
            throw ArgumentError(who + ": window " + to_string(k, 'x') + " does not fit input " +
                                to_string(in));
    }
    return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 3-D convolution
// ---------------------------------------------------------------------------

struct Conv3DSpec {
    Extent3 kernel{1, 1, 1};
    Extent3 stride{1, 1, 1};
    std::size_t channels = 1;
    Padding padding = Padding::valid;
};

struct LayerGrad {
    Tensor4 input;                // d loss / d x
    std::vector<double> params;   // d loss / d params, same layout as LayerParams::values
};

class Conv3D {
public:
    Conv3D(const Conv3DSpec& spec, std::size_t in_channels, Activation act = Activation::relu)
        : spec_(spec), in_channels_(in_channels), act_(act) {
        for (std::size_t a = 0; a < 3; ++a) {
            detail::require(spec.kernel[a] >= 1, "Conv3D: kernel extents must be >= 1");
            detail::require(spec.stride[a] >= 1, "Conv3D: stride components must be >= 1");
        }
        detail::require(spec.channels >= 1 && in_channels >= 1, "Conv3D: channel counts must be >= 1");
        params_ = LayerParams(weight_count() + spec.channels);
    }

    [[nodiscard]] const Conv3DSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t in_channels() const noexcept { return in_channels_; }
    [[nodiscard]] Activation activation() const noexcept { return act_; }
    [[nodiscard]] std::size_t weight_count() const noexcept {
        return spec_.channels * spec_.kernel[0] * spec_.kernel[1] * spec_.kernel[2] * in_channels_;
    }

    LayerParams& params() noexcept { return params_; }
    [[nodiscard]] const LayerParams& params() const noexcept { return params_; }

    /// Index into params().values of w[co][kx][ky][kz][ci].
    [[nodiscard]] std::size_t weight_index(std::size_t co, std::size_t kx, std::size_t ky,
                                           std::size_t kz, std::size_t ci) const noexcept {
        const auto& k = spec_.kernel;
        return (((co * k[0] + kx) * k[1] + ky) * k[2] + kz) * in_channels_ + ci;
    }
    [[nodiscard]] std::size_t bias_index(std::size_t co) const noexcept {
        return weight_count() + co;
    }

    void init_gaussian(double stddev, std::uint64_t seed) {
        auto w = gaussian_init(weight_count(), stddev, seed);
        std::copy(w.begin(), w.end(), params_.values.begin());
        std::fill(params_.values.begin() + static_cast<std::ptrdiff_t>(weight_count()),
                  params_.values.end(), 0.0);
    }

    [[nodiscard]] Shape4 output_shape(const Shape4& in) const {
        check_input(in);
        const auto g = geometry(in);
        return {g[0].out, g[1].out, g[2].out, spec_.channels};
    }

    [[nodiscard]] Tensor4 forward(const Tensor4& x) const {
        const Shape4& in = x.dims();
        check_input(in);
        const auto g = geometry(in);
        Tensor4 y({g[0].out, g[1].out, g[2].out, spec_.channels});
        const auto& k = spec_.kernel;
        const auto& s = spec_.stride;
        const auto& w = params_.values;
        const std::size_t cin = in_channels_;
        for (std::size_t ox = 0; ox < g[0].out; ++ox)
            for (std::size_t oy = 0; oy < g[1].out; ++oy)
                for (std::size_t oz = 0; oz < g[2].out; ++oz)
                    for (std::size_t co = 0; co < spec_.channels; ++co) {
                        double acc = w[bias_index(co)];
                        for (std::size_t kx = 0; kx < k[0]; ++kx) {
                            const auto ix = static_cast<std::ptrdiff_t>(ox * s[0] + kx) -
                                            static_cast<std::ptrdiff_t>(g[0].pad_lo);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in[0])) continue;
                            for (std::size_t ky = 0; ky < k[1]; ++ky) {
                                const auto iy = static_cast<std::ptrdiff_t>(oy * s[1] + ky) -
                                                static_cast<std::ptrdiff_t>(g[1].pad_lo);
                                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in[1])) continue;
                                for (std::size_t kz = 0; kz < k[2]; ++kz) {
                                    const std::size_t iz = oz * s[2] + kz;
                                    const double* xp = x.values().data() + x.offset(static_cast<std::size_t>(ix),
                                                                                  static_cast<std::size_t>(iy), iz, 0);
                                    const double* wp = &w[weight_index(co, kx, ky, kz, 0)];
                                    for (std::size_t ci = 0; ci < cin; ++ci) acc += wp[ci] * xp[ci];
                                }
                            }
                        }
                        y(ox, oy, oz, co) = acc;
                    }
        apply_activation(act_, y.values());
        return y;
    }

    /// Gradients given the forward input x, forward output y and dL/dy.
    [[nodiscard]] LayerGrad backward(const Tensor4& x, const Tensor4& y, const Tensor4& dy) const {
        const Shape4& in = x.dims();
        check_input(in);
        const auto g = geometry(in);
        const Shape4 out{g[0].out, g[1].out, g[2].out, spec_.channels};
        if (y.dims() != out || dy.dims() != out)
            throw ArgumentError("Conv3D::backward: output gradient shape " + to_string(dy.dims()) +
                                " does not match forward output " + to_string(out));
        Tensor4 dpre = dy;
        activation_backward(act_, y.values(), dpre.values());

        LayerGrad grad{Tensor4(in), std::vector<double>(params_.size(), 0.0)};
        const auto& k = spec_.kernel;
        const auto& s = spec_.stride;
        const auto& w = params_.values;
        const std::size_t cin = in_channels_;
        for (std::size_t ox = 0; ox < out[0]; ++ox)
            for (std::size_t oy = 0; oy < out[1]; ++oy)
                for (std::size_t oz = 0; oz < out[2]; ++oz)
                    for (std::size_t co = 0; co < spec_.channels; ++co) {
                        const double d = dpre(ox, oy, oz, co);
                        if (d == 0.0) continue;
                        grad.params[bias_index(co)] += d;
                        for (std::size_t kx = 0; kx < k[0]; ++kx) {
                            const auto ix = static_cast<std::ptrdiff_t>(ox * s[0] + kx) -
                                            static_cast<std::ptrdiff_t>(g[0].pad_lo);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in[0])) continue;
                            for (std::size_t ky = 0; ky < k[1]; ++ky) {
                                const auto iy = static_cast<std::ptrdiff_t>(oy * s[1] + ky) -
                                                static_cast<std::ptrdiff_t>(g[1].pad_lo);
                                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in[1])) continue;
                                for (std::size_t kz = 0; kz < k[2]; ++kz) {
                                    const std::size_t iz = oz * s[2] + kz;
                                    const std::size_t xo = x.offset(static_cast<std::size_t>(ix),
                                                                    static_cast<std::size_t>(iy), iz, 0);
                                    const std::size_t wo = weight_index(co, kx, ky, kz, 0);
                                    const double* xp = x.values().data() + xo;
                                    double* gxp = grad.input.values().data() + xo;
                                    double* gwp = grad.params.data() + wo;
                                    const double* wp = w.data() + wo;
                                    for (std::size_t ci = 0; ci < cin; ++ci) {
                                        gwp[ci] += d * xp[ci];
                                        gxp[ci] += d * wp[ci];
                                    }
                                }
                            }
                        }
                    }
        return grad;
    }

private:
    void check_input(const Shape4& in) const {
        if (in[3] != in_channels_)
            throw ArgumentError("Conv3D: input " + to_string(in) + " has " + std::to_string(in[3]) +
                                " channels, layer expects " + std::to_string(in_channels_));
    }
    [[nodiscard]] std::array<detail::AxisGeometry, 3> geometry(const Shape4& in) const {
        return detail::window_geometry(in, spec_.kernel, spec_.stride, spec_.padding, "Conv3D");
    }

    Conv3DSpec spec_;
    std::size_t in_channels_;
    Activation act_;
    LayerParams params_;
};

// ---------------------------------------------------------------------------
// 3-D max pooling (per channel)
// ---------------------------------------------------------------------------

struct MaxPool3DSpec {
    Extent3 window{1, 1, 1};
    Extent3 stride{1, 1, 1};
    Padding padding = Padding::valid;
};

struct PoolResult {
    Tensor4 output;
    std::vector<std::size_t> argmax;  // flat offset into the input, one per output entry
    Shape4 input_dims;
};

class MaxPool3D {
public:
    explicit MaxPool3D(const MaxPool3DSpec& spec) : spec_(spec) {
        for (std::size_t a = 0; a < 3; ++a) {
            detail::require(spec.window[a] >= 1, "MaxPool3D: window components must be >= 1");
            detail::require(spec.stride[a] >= 1, "MaxPool3D: stride components must be >= 1");
        }
    }

    [[nodiscard]] const MaxPool3DSpec& spec() const noexcept { return spec_; }

    [[nodiscard]] Shape4 output_shape(const Shape4& in) const {
        const auto g = detail::window_geometry(in, spec_.window, spec_.stride, spec_.padding, "MaxPool3D");
        return {g[0].out, g[1].out, g[2].out, in[3]};
    }

    /// Window maximum; ties go to the first element in (x, y, z) scan order.
    [[nodiscard]] PoolResult forward(const Tensor4& x) const {
        const Shape4& in = x.dims();
        const auto g = detail::window_geometry(in, spec_.window, spec_.stride, spec_.padding, "MaxPool3D");
        const Shape4 out{g[0].out, g[1].out, g[2].out, in[3]};
        PoolResult r{Tensor4(out), std::vector<std::size_t>(out[0] * out[1] * out[2] * out[3]), in};
        const auto& k = spec_.window;
        const auto& s = spec_.stride;
        std::size_t o = 0;
        for (std::size_t ox = 0; ox < out[0]; ++ox)
            for (std::size_t oy = 0; oy < out[1]; ++oy)
                for (std::size_t oz = 0; oz < out[2]; ++oz)
                    for (std::size_t c = 0; c < out[3]; ++c, ++o) {
                        double best = -std::numeric_limits<double>::infinity();
                        std::size_t arg = std::numeric_limits<std::size_t>::max();
                        for (std::size_t kx = 0; kx < k[0]; ++kx) {
                            const auto ix = static_cast<std::ptrdiff_t>(ox * s[0] + kx) -
                                            static_cast<std::ptrdiff_t>(g[0].pad_lo);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in[0])) continue;
                            for (std::size_t ky = 0; ky < k[1]; ++ky) {
                                const auto iy = static_cast<std::ptrdiff_t>(oy * s[1] + ky) -
                                                static_cast<std::ptrdiff_t>(g[1].pad_lo);
                                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in[1])) continue;
                                for (std::size_t kz = 0; kz < k[2]; ++kz) {
                                    const std::size_t off = x.offset(static_cast<std::size_t>(ix),
                                                                     static_cast<std::size_t>(iy),
                                                                     oz * s[2] + kz, c);
                                    const double v = x.values()[off];
                                    if (arg == std::numeric_limits<std::size_t>::max() || v > best) {
                                        best = v;
                                        arg = off;
                                    }
                                }
                            }
                        }
                        r.output.values()[o] = best;
                        r.argmax[o] = arg;
                    }
        return r;
    }

private:
    MaxPool3DSpec spec_;
};

/// Routes each upstream entry to the input position that won its window.
inline Tensor4 maxpool3d_backward(const PoolResult& fwd, const Tensor4& dy) {
    if (dy.dims() != fwd.output.dims() || fwd.argmax.size() != dy.size())
        throw ArgumentError("maxpool3d_backward: gradient " + to_string(dy.dims()) +
                            " does not match pooled output " + to_string(fwd.output.dims()));
    Tensor4 dx(fwd.input_dims);
    for (std::size_t i = 0; i < dy.size(); ++i) {
        if (fwd.argmax[i] >= dx.size())
            throw ArgumentError("maxpool3d_backward: stale argmax index");
        dx.values()[fwd.argmax[i]] += dy.values()[i];
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

struct DenseGrad {
    std::vector<double> input;
    std::vector<double> params;
};

class Dense {
public:
    Dense(std::size_t in, std::size_t out, Activation act = Activation::relu)
        : in_(in), out_(out), act_(act), params_(in * out + out) {
        detail::require(in >= 1 && out >= 1, "Dense: widths must be >= 1");
    }

    [[nodiscard]] std::size_t in_width() const noexcept { return in_; }
    [[nodiscard]] std::size_t out_width() const noexcept { return out_; }
    [[nodiscard]] Activation activation() const noexcept { return act_; }
    LayerParams& params() noexcept { return params_; }
    [[nodiscard]] const LayerParams& params() const noexcept { return params_; }

    /// Row-major weight W[o][i], then biases.
    [[nodiscard]] std::size_t weight_index(std::size_t o, std::size_t i) const noexcept {
        return o * in_ + i;
    }
    [[nodiscard]] std::size_t bias_index(std::size_t o) const noexcept { return in_ * out_ + o; }

    void init_gaussian(double stddev, std::uint64_t seed) {
        auto w = gaussian_init(in_ * out_, stddev, seed);
        std::copy(w.begin(), w.end(), params_.values.begin());
        std::fill(params_.values.begin() + static_cast<std::ptrdiff_t>(in_ * out_),
                  params_.values.end(), 0.0);
    }

    [[nodiscard]] std::vector<double> forward(std::span<const double> x) const {
        check(x.size(), "input");
        std::vector<double> y(out_);
        const auto& p = params_.values;
        for (std::size_t o = 0; o < out_; ++o) {
            double acc = p[bias_index(o)];
            const double* w = p.data() + o * in_;
            for (std::size_t i = 0; i < in_; ++i) acc += w[i] * x[i];
            y[o] = acc;
        }
        apply_activation(act_, y);
        return y;
    }

    [[nodiscard]] DenseGrad backward(std::span<const double> x, std::span<const double> y,
                                     std::span<const double> dy) const {
        check(x.size(), "input");
        detail::require(y.size() == out_ && dy.size() == out_,
                        "Dense::backward: output gradient has wrong width");
        std::vector<double> dpre(dy.begin(), dy.end());
        activation_backward(act_, y, dpre);
        DenseGrad g{std::vector<double>(in_, 0.0), std::vector<double>(params_.size(), 0.0)};
        const auto& p = params_.values;
        for (std::size_t o = 0; o < out_; ++o) {
            const double d = dpre[o];
            g.params[bias_index(o)] = d;
            if (d == 0.0) continue;
            const double* w = p.data() + o * in_;
            double* gw = g.params.data() + o * in_;
            for (std::size_t i = 0; i < in_; ++i) {
                gw[i] = d * x[i];
                g.input[i] += d * w[i];
            }
        }
        return g;
    }

private:
    void check(std::size_t n, const char* what) const {
        if (n != in_)
            throw ArgumentError(std::string("Dense: ") + what + " width " + std::to_string(n) +
                                " does not match layer width " + std::to_string(in_));
    }

    std::size_t in_;
    std::size_t out_;
    Activation act_;
    LayerParams params_;
};

}  // namespace mcnn
