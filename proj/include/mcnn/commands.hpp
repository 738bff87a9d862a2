#pragma once

// End-to-end workflows behind the command-line tool: mapping fits, training
// runs, hyperparameter grids, evaluation and the input-arm ablation. Every
// command returns its outputs in memory; nothing touches disk until the
// whole command has succeeded (see CommandOutput::commit).

#include "mcnn/checkpoint.hpp"
#include "mcnn/data.hpp"
#include "mcnn/error.hpp"
#include "mcnn/io.hpp"
#include "mcnn/mapping.hpp"
#include "mcnn/metrics.hpp"
#include "mcnn/model.hpp"
#include "mcnn/png.hpp"

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace mcnn::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Output staging
// ---------------------------------------------------------------------------

struct CommandOutput {
    std::vector<std::pair<fs::path, std::vector<std::uint8_t>>> files;
    std::string text;  // human-readable summary for stdout

    void add(fs::path path, std::vector<std::uint8_t> bytes) {
        files.emplace_back(std::move(path), std::move(bytes));
    }
    void add(fs::path path, const std::string& s) {
        files.emplace_back(std::move(path), std::vector<std::uint8_t>(s.begin(), s.end()));
    }

    /// Creates parent directories and writes every staged file atomically.
    void commit() const {
        for (const auto& [path, bytes] : files) {
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            io::write_file_atomic(path, bytes);
        }
    }
};

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets and configuration
// ---------------------------------------------------------------------------

struct Dataset {
    HsiCube cube;
    std::optional<McnnConfig> config;  // from the descriptor, if any
    fs::path path;
};

/// A bare .hst cube, or a JSON descriptor:
///   {"cube": "cube.hst", "class_names": [...], "config": {...} | "config.json"}
/// Relative paths are resolved against the descriptor's directory.
inline Dataset load_dataset(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("dataset not found: " + path.string());
    if (path.extension() == ".hst") return {load_cube(path), std::nullopt, path};

    Json j;
    try {
        std::ifstream in(path);
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw FormatError("dataset descriptor is not valid JSON: " + std::string(e.what()), 0);
    }
    if (!j.is_object() || !j.contains("cube"))
        throw FormatError("dataset descriptor needs a \"cube\" entry", 0);
    const fs::path base = path.parent_path();
    Dataset d{load_cube(base / j["cube"].get<std::string>()), std::nullopt, path};
    if (j.contains("class_names")) d.cube.class_names = j["class_names"].get<std::vector<std::string>>();
    if (j.contains("config")) {
        const auto& c = j["config"];
        if (c.is_string()) {
            std::ifstream in(base / c.get<std::string>());
            if (!in) throw DataError("cannot open config " + (base / c.get<std::string>()).string());
            d.config = config_from_json(Json::parse(in));
        } else {
            d.config = config_from_json(c);
        }
    }
    return d;
}

inline McnnConfig load_config_file(const fs::path& path, const McnnConfig& base) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config " + path.string());
    try {
        return config_from_json(Json::parse(in), base);
    } catch (const Json::parse_error& e) {
        throw ArgumentError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

struct Overrides {
    std::optional<fs::path> config;
    std::optional<Shape3> ranks;
    std::optional<std::size_t> batch;
    std::optional<double> lr;
    std::optional<std::size_t> epochs;
    std::optional<std::uint64_t> seed;
};

/// Descriptor config, then --config, then flag overrides. Band and class
/// counts always come from the cube. The result is shape-checked for the
/// given input mode before any compute happens.
inline McnnConfig resolve_config(const Dataset& d, const Overrides& o, InputMode mode = InputMode::mapping) {
    McnnConfig c = d.config.value_or(indian_pines_config());
    if (o.config) c = load_config_file(*o.config, c);
    c.bands = d.cube.bands();
    if (d.cube.has_labels()) c.class_count = d.cube.class_count();
    if (o.ranks) c.ranks = *o.ranks;
    if (o.batch) c.batch_size = *o.batch;
    if (o.lr) c.learning_rate = *o.lr;
    if (o.epochs) c.epochs = *o.epochs;
    if (o.seed) c.seed = *o.seed;
    validate_ranks(c.patch_dims(), c.ranks);
    mcnn::detail::require(c.batch_size >= 1, "batch size must be >= 1");
    mcnn::detail::require(c.learning_rate > 0.0, "learning rate must be positive");
    const McnnConfig net = network_config(c, mode);
    propagate_shapes(net, net.ranks);
    return c;
}

// ---------------------------------------------------------------------------
// Preparation: patches, split, normalization
// ---------------------------------------------------------------------------

struct Prepared {
    LabeledPatchSet set;
    NormalizationStats stats;
    std::vector<std::string> warnings;
};

/// Extract, split, then normalize with statistics from the training pixels
/// (or with `fixed` statistics, e.g. from a checkpoint).
inline Prepared prepare(const HsiCube& cube, const McnnConfig& cfg, const NormalizationStats* fixed = nullptr) {
    if (!cube.has_labels()) throw DataError("cube has no labels");
    if (cube.bands() != cfg.bands)
        throw DataError("cube has " + std::to_string(cube.bands()) + " bands, config expects " +
                        std::to_string(cfg.bands));
    Prepared p{split(extract_patches(cube, cfg.patch_size, cfg.mirror_border), cfg.split, cfg.seed,
                     cfg.stratified),
               {},
               {}};
    p.warnings = p.set.warnings;
    if (fixed) {
        p.stats = *fixed;
    } else {
        const auto mask = split_mask(p.set, cube, SplitTag::train);
        auto n = normalize(cube, cfg.normalization, mask);
        p.stats = std::move(n.stats);
        p.warnings.insert(p.warnings.end(), n.warnings.begin(), n.warnings.end());
    }
    for (auto& patch : p.set.patches) p.stats.apply(patch);
    return p;
}

inline std::vector<Tensor3> training_patches(const LabeledPatchSet& set) {
    std::vector<Tensor3> out;
    for (auto i : set.indices(SplitTag::train)) out.push_back(set.patches[i]);
    mcnn::detail::require(!out.empty(), "no training patches");
    return out;
}

// ---------------------------------------------------------------------------
// Training pipeline
// ---------------------------------------------------------------------------

struct RunResult {
    Checkpoint checkpoint;
    TrainingLog log;
    ConfusionMatrix test_confusion;
    double preprocessing_seconds = 0.0;
    double total_seconds = 0.0;
    std::vector<std::string> warnings;
};

/// Replaces every patch by its own Tucker core (ALS per patch).
inline void per_patch_cores(LabeledPatchSet& set, const McnnConfig& cfg) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        const MappingStack s = fit_tensor(set.patches[i], cfg.ranks,
                                          mcnn::detail::mix_seed(cfg.seed, 0x7d00 + i), cfg.mapping_fit);
        set.patches[i] = project(s, set.patches[i]);
    }
}

inline RunResult run_pipeline(const HsiCube& cube, const McnnConfig& cfg, InputMode mode) {
    const auto t0 = std::chrono::steady_clock::now();
    Prepared prep = prepare(cube, cfg);
    std::vector<std::string> warnings = prep.warnings;

    const auto tp = std::chrono::steady_clock::now();
    MappingStack stack = [&] {
        switch (mode) {
            case InputMode::mapping: {
                const auto train = training_patches(prep.set);
                MappingStack s = fit(train, cfg.ranks, mcnn::detail::mix_seed(cfg.seed, 0x3a9), cfg.mapping_fit);
                if (!s.converged)
                    warnings.push_back("mapping fit stopped at max_iters with core delta " +
                                       detail::fmt("%.6g", s.final_core_delta));
                return s;
            }
            case InputMode::raw: return identity_stack(cfg.patch_dims());
            case InputMode::per_patch_td:
                per_patch_cores(prep.set, cfg);
                return identity_stack(cfg.ranks);
        }
        throw ArgumentError("unknown input mode");
    }();
    const double preprocessing = mode == InputMode::raw ? 0.0 : detail::seconds_since(tp);

    McnnModel model = build(network_config(cfg, mode), std::move(stack), mcnn::detail::mix_seed(cfg.seed, 0xb111d));
    TrainingLog log = train_epochs(model, prep.set, train_options(cfg));

    const PatchView test = select(prep.set, SplitTag::test);
    ConfusionMatrix cm(cfg.class_count);
    if (!test.patches.empty()) cm = confusion(test.labels, predict(model, test.patches), cfg.class_count);

    RunResult r{Checkpoint{cfg, mode, prep.stats, std::move(model)}, std::move(log), std::move(cm), 0.0, 0.0, {}};
    r.preprocessing_seconds = preprocessing;
    r.total_seconds = detail::seconds_since(t0);
    r.warnings = std::move(warnings);
    return r;
}

// ---------------------------------------------------------------------------
// Report formatting
// ---------------------------------------------------------------------------

inline std::string format_log(const TrainingLog& log) {
    std::ostringstream s;
    s << "# epoch\tmean_loss\tval_oa\n";
    for (const auto& r : log.epochs)
        s << r.epoch << '\t' << detail::fmt("%.12f", r.mean_loss) << '\t'
          << (r.val_oa ? detail::fmt("%.6f", *r.val_oa) : std::string("-")) << '\n';
    return s.str();
}

struct ScoreSummary {
    double oa, aa, kappa;
};

inline ScoreSummary scores(const ConfusionMatrix& cm) {
    return {overall_accuracy(cm), average_accuracy(cm), kappa(cm)};
}

/// One row per class, then OA, AA and kappa x 100 (percent values).
inline std::string format_metrics(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
    std::ostringstream s;
    s << "# class\tname\taccuracy_pct\tsamples\n";
    const auto acc = per_class_accuracy(cm);
    for (std::size_t k = 0; k < cm.class_count(); ++k) {
        const std::string name = k < names.size() ? names[k] : "class_" + std::to_string(k + 1);
        s << k + 1 << '\t' << name << '\t' << (acc[k] >= 0 ? detail::fmt("%.2f", 100 * acc[k]) : "-") << '\t'
          << cm.row_sum(k) << '\n';
    }
    const auto sc = scores(cm);
    s << "OA\t-\t" << detail::fmt("%.2f", 100 * sc.oa) << '\t' << cm.total() << '\n';
    s << "AA\t-\t" << detail::fmt("%.2f", 100 * sc.aa) << '\t' << cm.total() << '\n';
    s << "kappa_x100\t-\t" << detail::fmt("%.2f", 100 * sc.kappa) << '\t' << cm.total() << '\n';
    return s.str();
}

struct MeanStd {
    double mean, std;
};

/// Mean and sample standard deviation (0 for a single value).
inline MeanStd mean_std(const std::vector<double>& v) {
    mcnn::detail::require(!v.empty(), "mean_std: no values");
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct FitMappingResult {
    MappingStack stack;
    double energy;
    CommandOutput output;
};

inline FitMappingResult cmd_fit_mapping(const Dataset& d, const McnnConfig& cfg, const fs::path& out) {
    const Prepared prep = prepare(d.cube, cfg);
    const auto train = training_patches(prep.set);
    const Tensor3 mean = average_patch(train);
    MappingStack s = fit_tensor(mean, cfg.ranks, mcnn::detail::mix_seed(cfg.seed, 0x3a9), cfg.mapping_fit);
    if (!s.converged)
        throw NumericError("mapping fit did not reach core delta <= " +
                               detail::fmt("%g", cfg.mapping_fit.tolerance) + " (last delta " +
                               detail::fmt("%.6g", s.final_core_delta) + ")",
                           s.iterations_used);
    FitMappingResult r{s, energy_retained(s, mean), {}};
    std::ostringstream t;
    t << "patch " << to_string(cfg.patch_dims()) << " -> ranks " << to_string(cfg.ranks) << '\n'
      << "factors " << s.u1.rows() << "x" << s.u1.cols() << ", " << s.u2.rows() << "x" << s.u2.cols() << ", "
      << s.u3.rows() << "x" << s.u3.cols() << '\n'
      << "iterations_used " << s.iterations_used << '\n'
      << "final_core_delta " << detail::fmt("%.6g", s.final_core_delta) << '\n'
      << "energy_retained " << detail::fmt("%.6f", r.energy) << '\n';
    r.output.text = t.str();
    r.output.add(out, encode_mapping(s));
    return r;
}

struct TrainCommandResult {
    std::vector<RunResult> runs;
    CommandOutput output;
};

/// One run writes <out>/checkpoint.mcnn and <out>/train_log.tsv; with
/// repeats > 1 each run k goes to <out>/run_k/ with seed + k, and
/// <out>/summary.tsv reports test OA/AA/kappa as mean and std.
inline TrainCommandResult cmd_train(const Dataset& d, const McnnConfig& cfg, const fs::path& out,
                                    std::size_t repeats = 1, InputMode mode = InputMode::mapping,
                                    std::size_t jobs = 1) {
    mcnn::detail::require(repeats >= 1, "repeats must be >= 1");
    mcnn::detail::require(jobs >= 1, "jobs must be >= 1");
    const auto config_for = [&](std::size_t k) {
        McnnConfig c = cfg;
        c.seed = cfg.seed + k;
        return c;
    };
    // Runs are independent (own seed, own outputs), so the parallel path
    // produces the same bytes as the sequential one.
    std::vector<std::optional<RunResult>> done(repeats);
    if (jobs == 1 || repeats == 1) {
        for (std::size_t k = 0; k < repeats; ++k) done[k] = run_pipeline(d.cube, config_for(k), mode);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(repeats);
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < std::min(jobs, repeats); ++j)
            pool.emplace_back([&] {
                for (std::size_t k; (k = next++) < repeats;) {
                    try {
                        done[k] = run_pipeline(d.cube, config_for(k), mode);
                    } catch (...) {
                        errors[k] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    TrainCommandResult res;
    std::ostringstream text;
    std::vector<double> oa, aa, ka;
    for (std::size_t k = 0; k < repeats; ++k) {
        const McnnConfig c = config_for(k);
        RunResult run = std::move(*done[k]);
        const fs::path dir = repeats == 1 ? out : out / ("run_" + std::to_string(k + 1));
        res.output.add(dir / "checkpoint.mcnn", encode_checkpoint(run.checkpoint));
        res.output.add(dir / "train_log.tsv", format_log(run.log));
        for (const auto& w : run.warnings) text << "warning: " << w << '\n';
        if (run.test_confusion.total() > 0) {
            const auto sc = scores(run.test_confusion);
            oa.push_back(100 * sc.oa);
            aa.push_back(100 * sc.aa);
            ka.push_back(100 * sc.kappa);
            text << "run " << k + 1 << " seed " << c.seed << ": test OA " << detail::fmt("%.2f", oa.back())
                 << "  AA " << detail::fmt("%.2f", aa.back()) << "  kappa_x100 " << detail::fmt("%.2f", ka.back())
                 << "  [timing, non-normative: preprocessing " << detail::fmt("%.3f", run.preprocessing_seconds)
                 << " s, total " << detail::fmt("%.3f", run.total_seconds) << " s]\n";
        }
        res.runs.push_back(std::move(run));
    }
    if (repeats > 1 && !oa.empty()) {
        std::ostringstream s;
        s << "# metric\tmean\tstd\tmean+-std\n";
        const std::pair<const char*, std::vector<double>*> rows[] = {{"OA", &oa}, {"AA", &aa}, {"kappa_x100", &ka}};
        for (const auto& [name, v] : rows) {
            const auto ms = mean_std(*v);
            s << name << '\t' << detail::fmt("%.4f", ms.mean) << '\t' << detail::fmt("%.4f", ms.std) << '\t'
              << detail::fmt("%.1f", ms.mean) << "+-" << detail::fmt("%.1f", ms.std) << '\n';
        }
        res.output.add(out / "summary.tsv", s.str());
        text << s.str();
    }
    res.output.text = text.str();
    return res;
}

struct GridCell {
    std::size_t batch;
    double lr;
    Shape3 ranks;
    std::size_t best_epoch = 0;
    double val_oa = 0.0;
};

struct ValidateResult {
    std::vector<GridCell> cells;
    std::size_t best = 0;
    CommandOutput output;
};

/// Trains one model per cell on the train split and keeps, for each, the
/// validation OA at the best checked epoch (every cfg.eval_every epochs).
inline ValidateResult cmd_validate(const Dataset& d, const McnnConfig& cfg, std::vector<GridCell> cells,
                                   const std::optional<fs::path>& out) {
    mcnn::detail::require(!cells.empty(), "validate: empty grid");
    ValidateResult res;
    // Split and normalization do not depend on the grid parameters unless ranks change.
    for (auto& cell : cells) {
        McnnConfig c = cfg;
        c.batch_size = cell.batch;
        c.learning_rate = cell.lr;
        c.ranks = cell.ranks;
        validate_ranks(c.patch_dims(), c.ranks);
        propagate_shapes(c, c.ranks);
        Prepared prep = prepare(d.cube, c);
        if (prep.set.indices(SplitTag::val).empty()) throw DataError("validate: the val split is empty");
        MappingStack s = fit(training_patches(prep.set), c.ranks, mcnn::detail::mix_seed(c.seed, 0x3a9), c.mapping_fit);
        McnnModel m = build(c, std::move(s), mcnn::detail::mix_seed(c.seed, 0xb111d));
        const TrainingLog log = train_epochs(m, prep.set, train_options(c));
        const auto best = best_epoch(log, c.eval_every);
        cell.best_epoch = best->epoch;
        cell.val_oa = *best->val_oa;
    }
    for (std::size_t i = 1; i < cells.size(); ++i)
        if (cells[i].val_oa > cells[res.best].val_oa) res.best = i;

    std::ostringstream s;
    s << "# cell\tbatch\tlr\tr1\tr2\tr3\tbest_epoch\tval_oa_pct\tbest\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        s << i + 1 << '\t' << c.batch << '\t' << detail::fmt("%g", c.lr) << '\t' << c.ranks[0] << '\t' << c.ranks[1]
          << '\t' << c.ranks[2] << '\t' << c.best_epoch << '\t' << detail::fmt("%.2f", 100 * c.val_oa) << '\t'
          << (i == res.best ? "*" : "") << '\n';
    }
    res.output.text = s.str();
    if (out) res.output.add(*out, s.str());
    res.cells = std::move(cells);
    return res;
}

inline std::vector<GridCell> hyper_grid(const McnnConfig& cfg, const std::vector<std::size_t>& batches,
                                        const std::vector<double>& lrs) {
    std::vector<GridCell> g;
    for (auto b : batches)
        for (auto lr : lrs) g.push_back({b, lr, cfg.ranks});
    return g;
}

inline std::vector<GridCell> rank_grid_cells(const McnnConfig& cfg, const std::vector<Shape3>& ranks) {
    std::vector<GridCell> g;
    for (const auto& r : ranks) g.push_back({cfg.batch_size, cfg.learning_rate, r});
    return g;
}

/// Network inputs for a set of (already normalized) patches under the
/// checkpoint's input mode.
inline std::vector<Tensor3> network_inputs(const Checkpoint& ck, std::vector<Tensor3> patches) {
    if (ck.input == InputMode::per_patch_td) {
        LabeledPatchSet tmp;
        tmp.patches = std::move(patches);
        per_patch_cores(tmp, ck.config);
        return std::move(tmp.patches);
    }
    return patches;
}

struct EvalResult {
    ConfusionMatrix confusion;
    std::vector<std::size_t> label_map;  // height*width, 0 = unlabeled, else predicted class + 1
    std::size_t height = 0, width = 0;
    CommandOutput output;
};

/// Scores the checkpoint on one split of the dataset. The split and
/// normalization are reproduced from the checkpoint's config and statistics.
inline EvalResult cmd_eval(const Checkpoint& ck, const Dataset& d, SplitTag tag,
                           const std::optional<fs::path>& report, const std::optional<fs::path>& map) {
    const McnnConfig& cfg = ck.config;
    if (d.cube.bands() != cfg.bands)
        throw DataError("checkpoint expects " + std::to_string(cfg.bands) + "-band patches but the cube has " +
                        std::to_string(d.cube.bands()) + " bands");
    if (d.cube.class_count() > cfg.class_count)
        throw DataError("cube has " + std::to_string(d.cube.class_count()) + " classes, checkpoint was trained on " +
                        std::to_string(cfg.class_count));
    const Prepared prep = prepare(d.cube, cfg, &ck.normalization);

    EvalResult res{ConfusionMatrix(cfg.class_count), {}, d.cube.height(), d.cube.width(), {}};
    const PatchView view = select(prep.set, tag);
    if (view.patches.empty()) throw DataError("the requested split is empty");
    res.confusion = confusion(view.labels, predict(ck.model, network_inputs(ck, view.patches)), cfg.class_count);
    const std::string text = format_metrics(res.confusion, d.cube.class_names);
    res.output.text = text;
    if (report) res.output.add(*report, text);

    if (map) {
        const auto pred = predict(ck.model, network_inputs(ck, prep.set.patches));
        res.label_map.assign(res.height * res.width, 0);
        std::vector<std::uint8_t> px(res.height * res.width, 0);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const auto& p = prep.set.pixels[i];
            res.label_map[p.row * res.width + p.col] = pred[i] + 1;
            px[p.row * res.width + p.col] = static_cast<std::uint8_t>(std::min<std::size_t>(pred[i] + 1, 255));
        }
        const auto pal = png::class_palette(std::min<std::size_t>(cfg.class_count, 255));
        res.output.add(*map, png::encode_indexed(res.width, res.height, px, pal));
    }
    return res;
}

struct AblationRow {
    InputMode arm;
    ScoreSummary score;
    double preprocessing_seconds;
    double total_seconds;
};

struct AblateResult {
    std::vector<AblationRow> rows;
    CommandOutput output;
};

/// Same split, seed and network settings for every arm; only the input
/// representation changes. Timing goes to a separate, non-normative file so
/// the report itself stays reproducible.
inline AblateResult cmd_ablate(const Dataset& d, const McnnConfig& cfg, const std::vector<InputMode>& arms,
                               const std::optional<fs::path>& out_dir) {
    mcnn::detail::require(!arms.empty(), "ablate: no arms selected");
    AblateResult res;
    for (auto arm : arms) {
        McnnConfig c = cfg;
        propagate_shapes(network_config(c, arm), network_config(c, arm).ranks);
        RunResult run = run_pipeline(d.cube, c, arm);
        if (run.test_confusion.total() == 0) throw DataError("ablate: the test split is empty");
        res.rows.push_back({arm, scores(run.test_confusion), run.preprocessing_seconds, run.total_seconds});
    }
    std::ostringstream rep, tim;
    rep << "# arm\tOA_pct\tAA_pct\tkappa\n";
    tim << "# timing is hardware-dependent and informational only (not an acceptance target)\n"
        << "# arm\tpreprocessing_s\ttotal_s\n";
    for (const auto& r : res.rows) {
        rep << input_mode_name(r.arm) << '\t' << detail::fmt("%.2f", 100 * r.score.oa) << '\t'
            << detail::fmt("%.2f", 100 * r.score.aa) << '\t' << detail::fmt("%.4f", r.score.kappa) << '\n';
        tim << input_mode_name(r.arm) << '\t' << detail::fmt("%.3f", r.preprocessing_seconds) << '\t'
            << detail::fmt("%.3f", r.total_seconds) << '\n';
    }
    res.output.text = rep.str() + tim.str();
    if (out_dir) {
        res.output.add(*out_dir / "ablation.tsv", rep.str());
        res.output.add(*out_dir / "ablation_timing.tsv", tim.str());
    }
    return res;
}

inline CommandOutput cmd_synth(const SynthSpec& spec, std::uint64_t seed, const fs::path& out) {
    CommandOutput o;
    const HsiCube cube = synth_cube(spec, seed);
    o.add(out, encode_cube(cube));
    std::ostringstream t;
    t << "synthetic cube " << cube.height() << "x" << cube.width() << "x" << cube.bands() << ", " << spec.classes
      << " classes, noise " << detail::fmt("%g", spec.noise) << ", seed " << seed << '\n';
    o.text = t.str();
    return o;
}

}  // namespace mcnn::cli
