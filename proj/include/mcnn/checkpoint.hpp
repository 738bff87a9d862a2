#pragma once

// Structured-text configs and the MAP1 / MCNN1 binary containers.
//
// MAP1: "MAP1" | u32 I1 I2 I3 | u32 R1 R2 R3 | u64 seed | u32 iterations_used
//       | u8 converged | f64 final_core_delta | 3 x (u32 rows | u32 cols | f64 values)
// MCNN1: "MCNN1" | u32 n | n bytes of JSON (config, normalization, input mode)
//        | u32 n | n bytes of MAP1 | u32 layers
//        | per layer: u8 kind (1 conv, 2 dense) | u32 rank | u32 dims[rank]
//                     | u32 bias count | f64 weights | f64 biases
//
// Factor matrices and weights are stored as f64 so a reloaded model is
// bit-identical to the one that was saved.

#include "mcnn/data.hpp"
#include "mcnn/error.hpp"
#include "mcnn/io.hpp"
#include "mcnn/mapping.hpp"
#include "mcnn/model.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mcnn {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config <-> JSON
// ---------------------------------------------------------------------------

namespace detail {

inline const char* padding_name(Padding p) { return p == Padding::same ? "same" : "valid"; }

inline Padding parse_padding(const Json& j) {
    const auto s = j.get<std::string>();
    if (s == "same") return Padding::same;
    if (s == "valid") return Padding::valid;
    throw ArgumentError("config: padding must be \"same\" or \"valid\", got \"" + s + "\"");
}

inline Extent3 parse_extent(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw ArgumentError(std::string("config: ") + what + " must be a 3-element array");
    Extent3 e{};
    for (std::size_t a = 0; a < 3; ++a) e[a] = j[a].get<std::size_t>();
    return e;
}

}  // namespace detail

inline Json config_to_json(const McnnConfig& c) {
    Json j;
    j["patch_size"] = c.patch_size;
    j["bands"] = c.bands;
    j["ranks"] = c.ranks;
    j["conv"] = Json::array();
    for (const auto& s : c.conv)
        j["conv"].push_back({{"kernel", s.kernel},
                             {"stride", s.stride},
                             {"channels", s.channels},
                             {"padding", detail::padding_name(s.padding)}});
    j["pool"] = Json::array();
    for (const auto& s : c.pool)
        j["pool"].push_back(
            {{"window", s.window}, {"stride", s.stride}, {"padding", detail::padding_name(s.padding)}});
    j["dense"] = c.dense;
    j["class_count"] = c.class_count;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["epochs"] = c.epochs;
    j["seed"] = c.seed;
    j["activation"] = c.activation == Activation::relu ? "relu" : "identity";
    j["conv_init_stddev"] = c.conv_init_stddev;
    j["normalization"] = c.normalization == NormMode::standardize ? "standardize" : "minmax";
    j["split"] = {c.split.train, c.split.val, c.split.test};
    j["stratified"] = c.stratified;
    j["mirror_border"] = c.mirror_border;
    j["mapping_tol"] = c.mapping_fit.tolerance;
    j["mapping_max_iters"] = c.mapping_fit.max_iters;
    j["eval_every"] = c.eval_every;
    return j;
}

/// Overlays the keys present in `j` onto `base`. Unknown keys are rejected.
inline McnnConfig config_from_json(const Json& j, McnnConfig c = indian_pines_config()) {
    if (!j.is_object()) throw ArgumentError("config: expected a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "patch_size") c.patch_size = v.get<std::size_t>();
            else if (key == "bands") c.bands = v.get<std::size_t>();
            else if (key == "ranks") c.ranks = detail::parse_extent(v, "ranks");
            else if (key == "conv") {
                c.conv.clear();
                for (const auto& s : v)
                    c.conv.push_back({detail::parse_extent(s.at("kernel"), "conv.kernel"),
                                      s.contains("stride") ? detail::parse_extent(s["stride"], "conv.stride")
                                                           : Extent3{1, 1, 1},
                                      s.at("channels").get<std::size_t>(),
                                      s.contains("padding") ? detail::parse_padding(s["padding"])
                                                            : Padding::valid});
            } else if (key == "pool") {
                c.pool.clear();
                for (const auto& s : v)
                    c.pool.push_back({detail::parse_extent(s.at("window"), "pool.window"),
                                      s.contains("stride") ? detail::parse_extent(s["stride"], "pool.stride")
                                                           : Extent3{1, 1, 1},
                                      s.contains("padding") ? detail::parse_padding(s["padding"])
                                                            : Padding::valid});
            } else if (key == "dense") c.dense = v.get<std::vector<std::size_t>>();
            else if (key == "class_count") c.class_count = v.get<std::size_t>();
            else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
            else if (key == "learning_rate") c.learning_rate = v.get<double>();
            else if (key == "epochs") c.epochs = v.get<std::size_t>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "activation") {
                const auto s = v.get<std::string>();
                if (s == "relu") c.activation = Activation::relu;
                else if (s == "identity") c.activation = Activation::identity;
                else throw ArgumentError("config: unknown activation \"" + s + "\"");
            } else if (key == "conv_init_stddev") c.conv_init_stddev = v.get<double>();
            else if (key == "normalization") {
                const auto s = v.get<std::string>();
                if (s == "standardize") c.normalization = NormMode::standardize;
                else if (s == "minmax") c.normalization = NormMode::minmax;
                else throw ArgumentError("config: unknown normalization \"" + s + "\"");
            } else if (key == "split") {
                const auto f = v.get<std::vector<double>>();
                if (f.size() != 3) throw ArgumentError("config: split must have 3 fractions");
                c.split = {f[0], f[1], f[2]};
            } else if (key == "stratified") c.stratified = v.get<bool>();
            else if (key == "mirror_border") c.mirror_border = v.get<bool>();
            else if (key == "mapping_tol") c.mapping_fit.tolerance = v.get<double>();
            else if (key == "mapping_max_iters") c.mapping_fit.max_iters = v.get<std::size_t>();
            else if (key == "eval_every") c.eval_every = v.get<std::size_t>();
            else if (key == "comment") continue;
            else throw ArgumentError("config: unknown key \"" + key + "\"");
        }
    } catch (const Json::exception& e) {
        throw ArgumentError(std::string("config: ") + e.what());
    }
    return c;
}

// ---------------------------------------------------------------------------
// MAP1
// ---------------------------------------------------------------------------

namespace detail {

inline void write_matrix(io::ByteWriter& w, const Matrix& m) {
    w.count(m.rows());
    w.count(m.cols());
    for (double v : m.values()) w.f64(v);
}

inline Matrix read_matrix(io::ByteReader& r) {
    const std::size_t at = r.offset();
    const std::size_t rows = r.u32(), cols = r.u32();
    if (rows == 0 || cols == 0) throw FormatError("matrix with zero dimension", at);
    r.need(rows * cols * 8, "matrix values");
    Matrix m(rows, cols);
    for (double& v : m.values()) v = r.f64();
    return m;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_mapping(const MappingStack& s) {
    io::ByteWriter w;
    w.tag("MAP1");
    for (auto d : s.input_dims) w.count(d);
    for (auto r : s.ranks) w.count(r);
    w.u64(s.seed);
    w.count(s.iterations_used);
    w.u8(s.converged ? 1 : 0);
    w.f64(s.final_core_delta);
    detail::write_matrix(w, s.u1);
    detail::write_matrix(w, s.u2);
    detail::write_matrix(w, s.u3);
    return w.take();
}

inline MappingStack read_mapping(io::ByteReader& r) {
    r.expect_tag("MAP1", "mapping stack");
    Shape3 dims{}, ranks{};
    for (auto& d : dims) d = r.u32();
    for (auto& k : ranks) k = r.u32();
    const std::uint64_t seed = r.u64();
    const std::size_t iters = r.u32();
    const bool converged = r.u8() != 0;
    const double delta = r.f64();
    const std::size_t at = r.offset();
    Matrix u1 = detail::read_matrix(r), u2 = detail::read_matrix(r), u3 = detail::read_matrix(r);
    const Matrix* us[] = {&u1, &u2, &u3};
    for (std::size_t n = 0; n < 3; ++n)
        if (us[n]->rows() != dims[n] || us[n]->cols() != ranks[n])
            throw FormatError("mapping factor shape disagrees with header", at);
    MappingStack s{std::move(u1), std::move(u2), std::move(u3), dims, ranks, seed, iters, delta, converged, {}};
    return s;
}

inline MappingStack decode_mapping(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader r(bytes);
    MappingStack s = read_mapping(r);
    if (r.remaining() != 0) throw FormatError("unexpected trailing bytes in MAP1 file", r.offset());
    return s;
}

inline void save_mapping(const MappingStack& s, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_mapping(s));
}

inline MappingStack load_mapping(const std::filesystem::path& path) {
    return decode_mapping(io::read_file(path));
}

// ---------------------------------------------------------------------------
// MCNN1
// ---------------------------------------------------------------------------

/// How network inputs are produced from patches.
enum class InputMode { mapping, raw, per_patch_td };

inline const char* input_mode_name(InputMode m) {
    switch (m) {
        case InputMode::mapping: return "mapping";
        case InputMode::raw: return "raw";
        case InputMode::per_patch_td: return "per-patch-td";
    }
    return "mapping";
}

inline InputMode parse_input_mode(const std::string& s) {
    if (s == "mapping") return InputMode::mapping;
    if (s == "raw") return InputMode::raw;
    if (s == "per-patch-td") return InputMode::per_patch_td;
    throw ArgumentError("unknown arm \"" + s + "\" (expected mapping, raw or per-patch-td)");
}

/// Config of the network proper for an input mode: raw feeds whole patches
/// (identity mapping), per-patch TD feeds R1 x R2 x R3 cores.
inline McnnConfig network_config(const McnnConfig& cfg, InputMode mode) {
    McnnConfig n = cfg;
    switch (mode) {
        case InputMode::mapping: break;
        case InputMode::raw: n.ranks = cfg.patch_dims(); break;
        case InputMode::per_patch_td:
            if (cfg.ranks[0] != cfg.ranks[1])
                throw ArgumentError("per-patch-td requires R1 == R2");
            n.patch_size = cfg.ranks[0];
            n.bands = cfg.ranks[2];
            break;
    }
    return n;
}

struct Checkpoint {
    McnnConfig config;  // pipeline config as given by the user
    InputMode input = InputMode::mapping;
    NormalizationStats normalization;
    McnnModel model;    // built from network_config(config, input)
};

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
    Json meta;
    meta["format"] = "MCNN1";
    meta["config"] = config_to_json(ck.config);
    meta["input"] = input_mode_name(ck.input);
    meta["normalization"] = {
        {"mode", ck.normalization.mode == NormMode::standardize ? "standardize" : "minmax"},
        {"offset", ck.normalization.offset},
        {"scale", ck.normalization.scale}};
    const std::string text = meta.dump(2);

    io::ByteWriter w;
    w.tag("MCNN1");
    w.count(text.size());
    w.tag(text);
    const auto map = encode_mapping(ck.model.mapping);
    w.count(map.size());
    w.bytes(map);
    w.count(ck.model.convs.size() + ck.model.dense.size());
    for (const auto& c : ck.model.convs) {
        w.u8(1);
        const auto& k = c.spec().kernel;
        w.u32(5);
        for (std::size_t d : {c.spec().channels, k[0], k[1], k[2], c.in_channels()}) w.count(d);
        w.count(c.spec().channels);
        for (double v : c.params().values) w.f64(v);
    }
    for (const auto& d : ck.model.dense) {
        w.u8(2);
        w.u32(2);
        w.count(d.out_width());
        w.count(d.in_width());
        w.count(d.out_width());
        for (double v : d.params().values) w.f64(v);
    }
    return w.take();
}

inline Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader r(bytes);
    r.expect_tag("MCNN1", "checkpoint");
    const std::size_t json_at = r.offset();
    const std::string text = r.string(r.u32());
    Json meta;
    try {
        meta = Json::parse(text);
    } catch (const Json::exception& e) {
        throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what(), json_at);
    }
    McnnConfig cfg;
    NormalizationStats norm;
    InputMode input;
    try {
        cfg = config_from_json(meta.at("config"));
        input = parse_input_mode(meta.at("input").get<std::string>());
        const auto& n = meta.at("normalization");
        norm.mode = n.at("mode").get<std::string>() == "minmax" ? NormMode::minmax : NormMode::standardize;
        norm.offset = n.at("offset").get<std::vector<double>>();
        norm.scale = n.at("scale").get<std::vector<double>>();
    } catch (const Json::exception& e) {
        throw FormatError(std::string("checkpoint metadata incomplete: ") + e.what(), json_at);
    }

    const std::size_t map_len = r.u32();
    r.need(map_len, "embedded mapping");
    const std::size_t map_start = r.offset();
    MappingStack mapping = read_mapping(r);
    if (r.offset() - map_start != map_len) throw FormatError("embedded mapping length mismatch", map_start);

    McnnModel model = [&] {
        try {
            return build(network_config(cfg, input), mapping, 0);
        } catch (const ArgumentError& e) {
            throw FormatError(std::string("checkpoint config inconsistent with mapping: ") + e.what(),
                              json_at);
        }
    }();

    const std::size_t layers_at = r.offset();
    const std::size_t layers = r.u32();
    if (layers != model.convs.size() + model.dense.size())
        throw FormatError("checkpoint layer count disagrees with config", layers_at);
    auto blocks = model.parameter_blocks();
    for (std::size_t b = 0; b < layers; ++b) {
        const std::size_t at = r.offset();
        const std::uint8_t kind = r.u8();
        const bool is_conv = b < model.convs.size();
        if (kind != (is_conv ? 1 : 2)) throw FormatError("unexpected layer kind", at);
        const std::size_t rank = r.u32();
        if (rank > 8) throw FormatError("implausible layer rank", at);
        std::size_t weights = 1;
        for (std::size_t k = 0; k < rank; ++k) weights *= r.u32();
        const std::size_t biases = r.u32();
        if (weights + biases != blocks[b]->size())
            throw FormatError("layer parameter count disagrees with config", at);
        r.need(blocks[b]->size() * 8, "layer values");
        for (double& v : blocks[b]->values) v = r.f64();
    }
    if (r.remaining() != 0) throw FormatError("unexpected trailing bytes in checkpoint", r.offset());
    return {std::move(cfg), input, std::move(norm), std::move(model)};
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(io::read_file(path));
}

}  // namespace mcnn
