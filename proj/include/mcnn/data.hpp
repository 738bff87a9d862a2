#pragma once

// Hyperspectral cubes: HST file I/O, patch extraction, stratified splits,
// normalization and a seeded synthetic-cube generator.
//
// HST layout (little-endian):
//   "HST1" | u32 height | u32 width | u32 bands | u32 has_labels
//   | f32 values[height][width][bands] | u16 labels[height][width] (if has_labels)

#include "mcnn/error.hpp"
#include "mcnn/io.hpp"
#include "mcnn/random.hpp"
#include "mcnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mcnn {

struct HsiCube {
    Tensor3 values;                      // (height, width, bands)
    std::vector<std::uint16_t> labels;   // height*width, 0 = unlabeled; empty if absent
    std::vector<std::string> class_names;

    [[nodiscard]] std::size_t height() const noexcept { return values.dims()[0]; }
    [[nodiscard]] std::size_t width() const noexcept { return values.dims()[1]; }
    [[nodiscard]] std::size_t bands() const noexcept { return values.dims()[2]; }
    [[nodiscard]] bool has_labels() const noexcept { return !labels.empty(); }
    [[nodiscard]] std::uint16_t label(std::size_t row, std::size_t col) const {
        return labels.empty() ? 0 : labels[row * width() + col];
    }
    /// Largest label present (C); classes are 1..C.
    [[nodiscard]] std::size_t class_count() const {
        return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
    }
};

// ---------------------------------------------------------------------------
// HST I/O
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> encode_cube(const HsiCube& cube) {
    io::ByteWriter w;
    w.tag("HST1");
    w.count(cube.height());
    w.count(cube.width());
    w.count(cube.bands());
    w.u32(cube.has_labels() ? 1u : 0u);
    for (double v : cube.values.values()) w.f32(static_cast<float>(v));
    for (auto l : cube.labels) w.u16(l);
    return w.take();
}

inline HsiCube decode_cube(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader r(bytes);
    r.expect_tag("HST1", "HST cube");
    const std::size_t h = r.u32(), wd = r.u32(), b = r.u32();
    const std::size_t flag_at = r.offset();
    const std::uint32_t flag = r.u32();
    if (h == 0 || wd == 0 || b == 0) throw FormatError("HST header has a zero dimension", 4);
    if (flag > 1) throw FormatError("HST label flag must be 0 or 1", flag_at);
    const std::size_t n = h * wd * b;
    r.need(n * 4, "HST values");
    HsiCube cube{Tensor3({h, wd, b}), {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = r.offset();
        const float v = r.f32();
        if (!std::isfinite(v))
            throw DataError("non-finite value at byte offset " + std::to_string(at));
        cube.values.values()[i] = v;
    }
    if (flag == 1) {
        r.need(h * wd * 2, "HST labels");
        cube.labels.resize(h * wd);
        for (auto& l : cube.labels) l = r.u16();
    }
    if (r.remaining() != 0) throw FormatError("unexpected trailing bytes in HST file", r.offset());
    return cube;
}

inline void save_cube(const HsiCube& cube, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_cube(cube));
}

inline HsiCube load_cube(const std::filesystem::path& path) {
    return decode_cube(io::read_file(path));
}

// ---------------------------------------------------------------------------
// Patches and splits
// ---------------------------------------------------------------------------

enum class SplitTag : std::uint8_t { none, train, val, test };

struct Pixel {
    std::size_t row;
    std::size_t col;
    bool operator==(const Pixel&) const = default;
};

struct LabeledPatchSet {
    std::vector<Tensor3> patches;
    std::vector<std::size_t> labels;  // zero-based class index (cube label - 1)
    std::vector<Pixel> pixels;        // source pixel of each patch
    std::vector<SplitTag> split;
    std::size_t patch_size = 0;
    std::size_t class_count = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t size() const noexcept { return patches.size(); }

    [[nodiscard]] std::vector<std::size_t> indices(SplitTag tag) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] == tag) out.push_back(i);
        return out;
    }
};

/// Index reflected into [0, n) without repeating the edge sample
/// (-1 -> 1, n -> n - 2).
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) return 0;
    const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    if (m >= static_cast<std::ptrdiff_t>(n)) m = period - m;
    return static_cast<std::size_t>(m);
}

/// S x S x bands window centred on (row, col); out-of-cube positions are
/// reflected. The caller guarantees the window is inside when not mirroring.
inline Tensor3 patch_at(const HsiCube& cube, std::size_t row, std::size_t col, std::size_t s) {
    const auto half = static_cast<std::ptrdiff_t>(s / 2);
    const std::size_t bands = cube.bands();
    Tensor3 p({s, s, bands});
    for (std::size_t a = 0; a < s; ++a) {
        const std::size_t r =
            reflect_index(static_cast<std::ptrdiff_t>(row) + static_cast<std::ptrdiff_t>(a) - half,
                          cube.height());
        for (std::size_t b = 0; b < s; ++b) {
            const std::size_t c =
                reflect_index(static_cast<std::ptrdiff_t>(col) + static_cast<std::ptrdiff_t>(b) - half,
                              cube.width());
            for (std::size_t k = 0; k < bands; ++k) p(a, b, k) = cube.values(r, c, k);
        }
    }
    return p;
}

/// One patch per labeled pixel, in row-major pixel order. Without mirroring,
/// pixels whose window leaves the cube are skipped.
inline LabeledPatchSet extract_patches(const HsiCube& cube, std::size_t patch_size,
                                       bool mirror_border = true) {
    if (patch_size == 0 || patch_size % 2 == 0)
        throw ArgumentError("extract_patches: patch size must be odd, got " + std::to_string(patch_size));
    detail::require(cube.has_labels(), "extract_patches: cube has no labels");
    LabeledPatchSet set;
    set.patch_size = patch_size;
    set.class_count = cube.class_count();
    const std::size_t half = patch_size / 2;
    for (std::size_t r = 0; r < cube.height(); ++r)
        for (std::size_t c = 0; c < cube.width(); ++c) {
            const auto l = cube.label(r, c);
            if (l == 0) continue;
            if (!mirror_border &&
                (r < half || c < half || r + half >= cube.height() || c + half >= cube.width()))
                continue;
            set.patches.push_back(patch_at(cube, r, c, patch_size));
            set.labels.push_back(static_cast<std::size_t>(l) - 1);
            set.pixels.push_back({r, c});
        }
    set.split.assign(set.size(), SplitTag::none);
    return set;
}

struct SplitFractions {
    double train = 0.2;
    double val = 0.1;
    double test = 0.7;
};

/// Seeded shuffle then train/val/test assignment, per class when stratified.
/// Group counts are round(f * n) for train and val; test takes the rest.
inline LabeledPatchSet split(LabeledPatchSet set, const SplitFractions& f, std::uint64_t seed,
                             bool stratified = true) {
    if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
        throw ArgumentError("split: fractions must be non-negative and sum to 1");
    detail::require(set.labels.size() == set.size(), "split: labels and patches differ in length");
    Rng rng(seed);
    set.seed = seed;
    set.split.assign(set.size(), SplitTag::none);

    std::vector<std::vector<std::size_t>> groups;
    if (stratified) {
        std::size_t classes = set.class_count;
        for (auto l : set.labels) classes = std::max(classes, l + 1);
        groups.resize(classes);
        for (std::size_t i = 0; i < set.size(); ++i) groups[set.labels[i]].push_back(i);
    } else {
        groups.emplace_back(set.size());
        for (std::size_t i = 0; i < set.size(); ++i) groups[0][i] = i;
    }

    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& idx = groups[g];
        if (stratified && !idx.empty() && idx.size() < 3)
            set.warnings.push_back("class " + std::to_string(g + 1) + " has only " +
                                   std::to_string(idx.size()) +
                                   " samples; it cannot appear in every split");
        rng.shuffle(idx);
        const auto n = static_cast<double>(idx.size());
        const std::size_t n_train = std::min(idx.size(), static_cast<std::size_t>(std::llround(f.train * n)));
        const std::size_t n_val =
            std::min(idx.size() - n_train, static_cast<std::size_t>(std::llround(f.val * n)));
        for (std::size_t k = 0; k < idx.size(); ++k)
            set.split[idx[k]] = k < n_train ? SplitTag::train
                                : k < n_train + n_val ? SplitTag::val
                                                      : SplitTag::test;
    }
    return set;
}

/// Copy of the patches (and labels) carrying the given tag.
struct PatchView {
    std::vector<Tensor3> patches;
    std::vector<std::size_t> labels;
};

inline PatchView select(const LabeledPatchSet& set, SplitTag tag) {
    PatchView v;
    for (auto i : set.indices(tag)) {
        v.patches.push_back(set.patches[i]);
        v.labels.push_back(set.labels[i]);
    }
    return v;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

enum class NormMode { standardize, minmax };

/// Affine per-band (standardize) or global (min-max) rescaling, fitted once
/// and re-applied to any tensor whose last mode is the spectral axis.
struct NormalizationStats {
    NormMode mode = NormMode::standardize;
    std::vector<double> offset;  // subtracted, per band
    std::vector<double> scale;   // multiplied after subtraction, per band (0 for degenerate bands)

    void apply(Tensor3& t) const {
        const std::size_t bands = t.dims()[2];
        detail::require(bands == offset.size(), "normalization: band count mismatch");
        auto v = t.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::size_t k = i % bands;
            v[i] = (v[i] - offset[k]) * scale[k];
        }
    }
};

struct NormalizedCube {
    HsiCube cube;
    NormalizationStats stats;
    std::vector<std::string> warnings;
};

/// Statistics over the pixels where mask is nonzero (all pixels if empty).
/// Standardization uses the population standard deviation.
inline NormalizedCube normalize(const HsiCube& cube, NormMode mode,
                                std::span<const std::uint8_t> mask = {}) {
    const std::size_t h = cube.height(), w = cube.width(), bands = cube.bands();
    detail::require(mask.empty() || mask.size() == h * w, "normalize: mask size mismatch");
    auto use = [&](std::size_t p) { return mask.empty() || mask[p] != 0; };
    std::size_t n = 0;
    for (std::size_t p = 0; p < h * w; ++p) n += use(p) ? 1 : 0;
    detail::require(n > 0, "normalize: mask selects no pixels");

    NormalizedCube out{cube, {mode, std::vector<double>(bands, 0.0), std::vector<double>(bands, 1.0)}, {}};
    const auto vals = cube.values.values();
    if (mode == NormMode::standardize) {
        for (std::size_t k = 0; k < bands; ++k) {
            double mean = 0.0;
            for (std::size_t p = 0; p < h * w; ++p)
                if (use(p)) mean += vals[p * bands + k];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t p = 0; p < h * w; ++p)
                if (use(p)) {
                    const double d = vals[p * bands + k] - mean;
                    var += d * d;
                }
            const double sd = std::sqrt(var / static_cast<double>(n));
            out.stats.offset[k] = mean;
            if (sd > 0.0) {
                out.stats.scale[k] = 1.0 / sd;
            } else {
                out.stats.scale[k] = 0.0;
                out.warnings.push_back("band " + std::to_string(k) + " has zero variance; mapped to 0");
            }
        }
    } else {
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t p = 0; p < h * w; ++p)
            if (use(p))
                for (std::size_t k = 0; k < bands; ++k) {
                    lo = std::min(lo, vals[p * bands + k]);
                    hi = std::max(hi, vals[p * bands + k]);
                }
        const double s = hi > lo ? 1.0 / (hi - lo) : 0.0;
        if (!(hi > lo)) out.warnings.push_back("cube is constant; mapped to 0");
        std::fill(out.stats.offset.begin(), out.stats.offset.end(), lo);
        std::fill(out.stats.scale.begin(), out.stats.scale.end(), s);
    }
    out.stats.apply(out.cube.values);
    return out;
}

/// Mask of the pixels on which a split tag sits.
inline std::vector<std::uint8_t> split_mask(const LabeledPatchSet& set, const HsiCube& cube, SplitTag tag) {
    std::vector<std::uint8_t> mask(cube.height() * cube.width(), 0);
    for (auto i : set.indices(tag)) mask[set.pixels[i].row * cube.width() + set.pixels[i].col] = 1;
    return mask;
}

// ---------------------------------------------------------------------------
// Synthetic cubes
// ---------------------------------------------------------------------------

struct SynthSpec {
    std::size_t classes = 4;
    std::size_t height = 40;
    std::size_t width = 40;
    std::size_t bands = 32;
    double noise = 0.1;              // per-band Gaussian noise stddev
    double signature_scale = 1.0;    // amplitude of the spectral bumps
    std::size_t bumps = 3;           // Gaussian bumps per class signature
    std::size_t blobs_per_class = 2; // Voronoi seeds per class
};

/// Class signatures: baseline plus `bumps` Gaussian bumps with random
/// centre, width and amplitude.
inline std::vector<std::vector<double>> synth_signatures(const SynthSpec& spec, std::uint64_t seed) {
    Rng rng(seed ^ 0x5197a1e5ull);
    const auto bands = static_cast<double>(spec.bands);
    std::vector<std::vector<double>> sig(spec.classes, std::vector<double>(spec.bands));
    for (auto& s : sig) {
        const double base = 0.2 + 0.3 * rng.uniform();
        std::fill(s.begin(), s.end(), base * spec.signature_scale);
        for (std::size_t b = 0; b < spec.bumps; ++b) {
            const double centre = rng.uniform() * bands;
            const double width = bands / 16.0 + rng.uniform() * bands / 6.0;
            const double amp = (0.5 + rng.uniform()) * spec.signature_scale;
            for (std::size_t k = 0; k < spec.bands; ++k) {
                const double d = (static_cast<double>(k) - centre) / width;
                s[k] += amp * std::exp(-0.5 * d * d);
            }
        }
    }
    return sig;
}

/// Voronoi layout of class blobs; every pixel labeled; each pixel is its
/// class signature plus seeded Gaussian noise.
inline HsiCube synth_cube(const SynthSpec& spec, std::uint64_t seed) {
    detail::require(spec.classes >= 2, "synth_cube: need at least 2 classes");
    detail::require(spec.classes < 65535, "synth_cube: too many classes for u16 labels");
    detail::require(spec.blobs_per_class >= 1, "synth_cube: blobs_per_class must be >= 1");
    detail::require(spec.noise >= 0.0, "synth_cube: noise must be non-negative");
    const auto sig = synth_signatures(spec, seed);

    Rng rng(seed);
    struct Site {
        double r, c;
        std::size_t cls;
    };
    std::vector<Site> sites;
    for (std::size_t b = 0; b < spec.blobs_per_class; ++b)
        for (std::size_t k = 0; k < spec.classes; ++k)
            sites.push_back({rng.uniform() * static_cast<double>(spec.height),
                             rng.uniform() * static_cast<double>(spec.width), k});

    HsiCube cube{Tensor3({spec.height, spec.width, spec.bands}),
                 std::vector<std::uint16_t>(spec.height * spec.width), {}};
    for (std::size_t r = 0; r < spec.height; ++r)
        for (std::size_t c = 0; c < spec.width; ++c) {
            std::size_t best = 0;
            double best_d = INFINITY;
            for (std::size_t s = 0; s < sites.size(); ++s) {
                const double dr = static_cast<double>(r) + 0.5 - sites[s].r;
                const double dc = static_cast<double>(c) + 0.5 - sites[s].c;
                const double d = dr * dr + dc * dc;
                if (d < best_d) {
                    best_d = d;
                    best = s;
                }
            }
            const std::size_t cls = sites[best].cls;
            cube.labels[r * spec.width + c] = static_cast<std::uint16_t>(cls + 1);
            for (std::size_t k = 0; k < spec.bands; ++k)
                cube.values(r, c, k) = sig[cls][k] + (spec.noise > 0.0 ? rng.normal(0.0, spec.noise) : 0.0);
        }
    for (std::size_t k = 0; k < spec.classes; ++k) cube.class_names.push_back("class_" + std::to_string(k + 1));
    return cube;
}

}  // namespace mcnn
