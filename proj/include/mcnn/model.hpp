#pragma once

// The three-section classifier: frozen mapping layers, a convolutional
// section of conv/pool pairs, and a fully connected section ending in
// class logits.

#include "mcnn/data.hpp"
#include "mcnn/error.hpp"
#include "mcnn/mapping.hpp"
#include "mcnn/metrics.hpp"
#include "mcnn/nn.hpp"
#include "mcnn/optim.hpp"
#include "mcnn/random.hpp"
#include "mcnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcnn {

struct McnnConfig {
    std::size_t patch_size = 13;
    std::size_t bands = 200;
    Shape3 ranks{7, 7, 40};
    std::vector<Conv3DSpec> conv;
    std::vector<MaxPool3DSpec> pool;  // pool[i] follows conv[i]; may be shorter than conv
    std::vector<std::size_t> dense{128};  // hidden widths; the class layer is appended
    std::size_t class_count = 16;
    std::size_t batch_size = 30;
    double learning_rate = 0.001;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;
    Activation activation = Activation::relu;
    double conv_init_stddev = 0.05;

    // Pipeline settings used by the command layer.
    NormMode normalization = NormMode::standardize;
    SplitFractions split{};
    bool stratified = true;
    bool mirror_border = true;
    FitOptions mapping_fit{};
    std::size_t eval_every = 10;

    [[nodiscard]] Shape3 patch_dims() const { return {patch_size, patch_size, bands}; }
};

/// Shape-consistent default chain for 13 x 13 x 200 patches:
/// 7x7x40 -> conv(64, 5x5x10, /1,1,5) -> 7x7x7x64 -> pool(3x3x5, /1,1,2) -> 7x7x2x64
/// -> conv(64, 5x5x2) -> 7x7x1x64 -> pool(3x3x1) -> 5x5x1x64 -> dense(128) -> classes.
inline McnnConfig indian_pines_config() {
    McnnConfig c;
    c.conv = {{{5, 5, 10}, {1, 1, 5}, 64, Padding::same}, {{5, 5, 2}, {1, 1, 1}, 64, Padding::same}};
    c.pool = {{{3, 3, 5}, {1, 1, 2}, Padding::same}, {{3, 3, 1}, {1, 1, 1}, Padding::valid}};
    return c;
}

/// 13 x 13 x 103 patches, ranks (7, 7, 20). The first pool uses a 2-deep
/// spectral window because the first conv leaves only 3 spectral positions.
inline McnnConfig pavia_config() {
    McnnConfig c = indian_pines_config();
    c.bands = 103;
    c.ranks = {7, 7, 20};
    c.class_count = 9;
    c.learning_rate = 0.003;
    c.pool[0] = {{3, 3, 2}, {1, 1, 1}, Padding::same};
    return c;
}

inline McnnConfig salinas_config() {
    McnnConfig c = indian_pines_config();
    c.bands = 224;
    c.learning_rate = 0.003;
    return c;
}

/// Small chain for 7 x 7 x 32 synthetic patches with ranks (5, 5, 8).
inline McnnConfig synthetic_config() {
    McnnConfig c;
    c.patch_size = 7;
    c.bands = 32;
    c.ranks = {5, 5, 8};
    c.class_count = 4;
    c.conv = {{{3, 3, 4}, {1, 1, 2}, 16, Padding::same}, {{3, 3, 2}, {1, 1, 1}, 16, Padding::same}};
    c.pool = {{{3, 3, 2}, {1, 1, 1}, Padding::same}, {{3, 3, 1}, {1, 1, 1}, Padding::valid}};
    c.dense = {64};
    return c;
}

// ---------------------------------------------------------------------------
// Shape propagation
// ---------------------------------------------------------------------------

struct LayerShape {
    std::string layer;
    Shape4 shape;  // output of `layer`; dense outputs are (width, 1, 1, 1)
};

/// Symbolic pass over the chain for a given mapped-input shape. Throws an
/// ArgumentError naming the first layer that does not fit.
inline std::vector<LayerShape> propagate_shapes(const McnnConfig& cfg, const Shape3& mapped) {
    detail::require(cfg.pool.size() <= cfg.conv.size(), "config: more pool layers than conv layers");
    detail::require(cfg.class_count >= 1, "config: class_count must be >= 1");
    std::vector<LayerShape> out;
    Shape4 s{mapped[0], mapped[1], mapped[2], 1};
    out.push_back({"mapping", s});
    for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
        const std::string name = "conv" + std::to_string(i + 1);
        try {
            s = Conv3D(cfg.conv[i], s[3]).output_shape(s);
        } catch (const ArgumentError& e) {
            throw ArgumentError("config: layer " + name + " rejects its input: " + e.what());
        }
        out.push_back({name, s});
        if (i < cfg.pool.size()) {
            const std::string pname = "pool" + std::to_string(i + 1);
            try {
                s = MaxPool3D(cfg.pool[i]).output_shape(s);
            } catch (const ArgumentError& e) {
                throw ArgumentError("config: layer " + pname + " rejects its input: " + e.what());
            }
            out.push_back({pname, s});
        }
    }
    for (std::size_t i = 0; i < cfg.dense.size(); ++i) {
        detail::require(cfg.dense[i] >= 1, "config: dense widths must be >= 1");
        out.push_back({"dense" + std::to_string(i + 1), {cfg.dense[i], 1, 1, 1}});
    }
    out.push_back({"output", {cfg.class_count, 1, 1, 1}});
    return out;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct McnnModel {
    McnnConfig config;
    MappingStack mapping;
    std::vector<Conv3D> convs;
    std::vector<MaxPool3D> pools;
    std::vector<Dense> dense;

    /// Every trainable parameter block, conv layers first.
    std::vector<LayerParams*> parameter_blocks() {
        std::vector<LayerParams*> p;
        for (auto& c : convs) p.push_back(&c.params());
        for (auto& d : dense) p.push_back(&d.params());
        return p;
    }
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Builds the layer chain around a fitted mapping. The mapping is frozen:
/// training never touches it.
inline McnnModel build(const McnnConfig& cfg, MappingStack mapping, std::uint64_t seed) {
    if (mapping.input_dims != cfg.patch_dims())
        throw ArgumentError("build: mapping input " + to_string(mapping.input_dims) +
                            " does not match configured patch " + to_string(cfg.patch_dims()));
    const auto shapes = propagate_shapes(cfg, mapping.ranks);

    McnnModel m{cfg, std::move(mapping), {}, {}, {}};
    std::size_t k = 1;
    std::size_t channels = 1;
    for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
        m.convs.emplace_back(cfg.conv[i], channels, cfg.activation);
        m.convs.back().init_gaussian(cfg.conv_init_stddev, detail::mix_seed(seed, k++));
        channels = cfg.conv[i].channels;
        if (i < cfg.pool.size()) m.pools.emplace_back(cfg.pool[i]);
    }
    // Flattened width entering the fully connected section.
    const auto& last_volume = shapes[shapes.size() - cfg.dense.size() - 2].shape;
    std::size_t width = last_volume[0] * last_volume[1] * last_volume[2] * last_volume[3];
    for (std::size_t i = 0; i <= cfg.dense.size(); ++i) {
        const bool is_output = i == cfg.dense.size();
        const std::size_t out = is_output ? cfg.class_count : cfg.dense[i];
        m.dense.emplace_back(width, out, is_output ? Activation::identity : cfg.activation);
        m.dense.back().init_gaussian(1.0 / std::sqrt(static_cast<double>(width)),
                                     detail::mix_seed(seed, k++));
        width = out;
    }
    return m;
}

/// Intermediate values kept for the backward pass.
struct ForwardCache {
    std::vector<Tensor4> conv_in;
    std::vector<Tensor4> conv_out;
    std::vector<PoolResult> pool;
    std::vector<std::vector<double>> dense_in;
    std::vector<std::vector<double>> dense_out;
};

/// Logits for an already-mapped input (shape = mapping ranks).
inline std::vector<double> logits_from_mapped(const McnnModel& m, const Tensor3& mapped,
                                              ForwardCache* cache = nullptr) {
    if (mapped.dims() != m.mapping.ranks)
        throw ArgumentError("forward: mapped input " + to_string(mapped.dims()) +
                            " does not match ranks " + to_string(m.mapping.ranks));
    Tensor4 x = Tensor4::from_tensor3(mapped);
    for (std::size_t i = 0; i < m.convs.size(); ++i) {
        Tensor4 y = m.convs[i].forward(x);
        if (i < m.pools.size()) {
            PoolResult p = m.pools[i].forward(y);
            Tensor4 next = p.output;
            if (cache) {
                cache->conv_in.push_back(std::move(x));
                cache->conv_out.push_back(std::move(y));
                cache->pool.push_back(std::move(p));
            }
            x = std::move(next);
        } else {
            if (cache) {
                cache->conv_in.push_back(std::move(x));
                cache->conv_out.push_back(y);
            }
            x = std::move(y);
        }
    }
    std::vector<double> v(x.values().begin(), x.values().end());
    for (const auto& d : m.dense) {
        std::vector<double> y = d.forward(v);
        if (cache) {
            cache->dense_in.push_back(std::move(v));
            cache->dense_out.push_back(y);
        }
        v = std::move(y);
    }
    return v;
}

inline std::vector<double> logits(const McnnModel& m, const Tensor3& patch) {
    return logits_from_mapped(m, project(m.mapping, patch));
}

/// Class probabilities: mapping -> conv/pool -> flatten -> dense -> softmax.
inline std::vector<double> forward(const McnnModel& m, const Tensor3& patch) {
    return softmax(logits(m, patch));
}

inline std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline std::vector<std::size_t> predict(const McnnModel& m, std::span<const Tensor3> patches) {
    std::vector<std::size_t> out;
    out.reserve(patches.size());
    for (const auto& p : patches) out.push_back(argmax(logits(m, p)));
    return out;
}

inline std::vector<std::size_t> predict_mapped(const McnnModel& m, std::span<const Tensor3> mapped) {
    std::vector<std::size_t> out;
    out.reserve(mapped.size());
    for (const auto& p : mapped) out.push_back(argmax(logits_from_mapped(m, p)));
    return out;
}

/// Per-block parameter gradients, in parameter_blocks() order.
using ModelGrads = std::vector<std::vector<double>>;

inline ModelGrads zero_grads(const McnnModel& m) {
    ModelGrads g;
    for (const auto& c : m.convs) g.emplace_back(c.params().size(), 0.0);
    for (const auto& d : m.dense) g.emplace_back(d.params().size(), 0.0);
    return g;
}

/// Cross-entropy loss of one mapped sample; adds its gradient into `acc`.
inline double accumulate_gradients(const McnnModel& m, const Tensor3& mapped, std::size_t label,
                                   ModelGrads& acc) {
    ForwardCache cache;
    const auto z = logits_from_mapped(m, mapped, &cache);
    LossGrad lg = softmax_cross_entropy(z, label);

    std::vector<double> dv = std::move(lg.grad);
    const std::size_t nc = m.convs.size();
    for (std::size_t i = m.dense.size(); i-- > 0;) {
        DenseGrad g = m.dense[i].backward(cache.dense_in[i], cache.dense_out[i], dv);
        auto& a = acc[nc + i];
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += g.params[k];
        dv = std::move(g.input);
    }
    if (nc == 0) return lg.loss;

    const Shape4 last = nc - 1 < m.pools.size() ? cache.pool[nc - 1].output.dims()
                                                : cache.conv_out[nc - 1].dims();
    Tensor4 dx(last, std::move(dv));
    for (std::size_t i = nc; i-- > 0;) {
        if (i < m.pools.size()) dx = maxpool3d_backward(cache.pool[i], dx);
        LayerGrad g = m.convs[i].backward(cache.conv_in[i], cache.conv_out[i], dx);
        auto& a = acc[i];
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += g.params[k];
        dx = std::move(g.input);
    }
    return lg.loss;
}

inline double loss_from_mapped(const McnnModel& m, const Tensor3& mapped, std::size_t label) {
    return softmax_cross_entropy(logits_from_mapped(m, mapped), label).loss;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpochRecord {
    std::size_t epoch;
    double mean_loss;
    std::optional<double> val_oa;
};

struct TrainingLog {
    std::vector<EpochRecord> epochs;
};

struct TrainOptions {
    std::size_t epochs = 30;
    std::size_t batch_size = 30;
    AdamConfig adam{};
    std::uint64_t seed = 0;
};

inline TrainOptions train_options(const McnnConfig& cfg) {
    TrainOptions o;
    o.epochs = cfg.epochs;
    o.batch_size = cfg.batch_size;
    o.adam.learning_rate = cfg.learning_rate;
    o.seed = cfg.seed;
    return o;
}

inline double accuracy(std::span<const std::size_t> truth, std::span<const std::size_t> pred) {
    detail::require(truth.size() == pred.size() && !truth.empty(), "accuracy: bad input");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) ok += truth[i] == pred[i] ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

/// Seeded mini-batch Adam on the train split; validation OA per epoch when
/// a val split exists. The mapping stack is read-only throughout.
inline TrainingLog train_epochs(McnnModel& m, const LabeledPatchSet& data, const TrainOptions& opt) {
    detail::require(opt.batch_size >= 1, "train: batch_size must be >= 1");
    opt.adam.validate();
    const auto train_idx = data.indices(SplitTag::train);
    const auto val_idx = data.indices(SplitTag::val);
    detail::require(!train_idx.empty(), "train: the train split is empty");
    for (auto l : data.labels)
        detail::require(l < m.config.class_count, "train: label exceeds class_count");

    std::vector<Tensor3> mapped;
    mapped.reserve(data.size());
    for (const auto& p : data.patches) mapped.push_back(project(m.mapping, p));

    std::vector<Tensor3> val_in;
    std::vector<std::size_t> val_truth;
    for (auto i : val_idx) {
        val_in.push_back(mapped[i]);
        val_truth.push_back(data.labels[i]);
    }

    Rng rng(detail::mix_seed(opt.seed, 0x7a11));
    std::vector<std::size_t> order = train_idx;
    TrainingLog log;
    auto blocks = m.parameter_blocks();
    for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t end = std::min(order.size(), start + opt.batch_size);
            ModelGrads g = zero_grads(m);
            for (std::size_t k = start; k < end; ++k)
                loss_sum += accumulate_gradients(m, mapped[order[k]], data.labels[order[k]], g);
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                for (double& x : g[b]) x *= inv;
                adam_step(*blocks[b], g[b], opt.adam);
            }
        }
        EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), std::nullopt};
        if (!val_in.empty()) rec.val_oa = accuracy(val_truth, predict_mapped(m, val_in));
        log.epochs.push_back(rec);
    }
    return log;
}

/// Epoch with the highest validation OA among those checked every
/// `every` epochs (the final epoch is always checked); ties go to the earliest.
inline std::optional<EpochRecord> best_epoch(const TrainingLog& log, std::size_t every = 1) {
    std::optional<EpochRecord> best;
    const std::size_t last = log.epochs.empty() ? 0 : log.epochs.back().epoch;
    for (const auto& r : log.epochs) {
        if (!r.val_oa) continue;
        if (every > 1 && r.epoch % every != 0 && r.epoch != last) continue;
        if (!best || *r.val_oa > *best->val_oa) best = r;
    }
    return best;
}

}  // namespace mcnn
