// mcnn: mapping-layer CNN experiments on hyperspectral cubes.
//
//   mcnn synth       --out cube.hst [--seed N] [--noise S] ...
//   mcnn fit-mapping --dataset D --out map.map1 [--ranks R1,R2,R3]
//   mcnn train       --dataset D --out DIR [--repeats K] [--arm A]
//   mcnn validate    --dataset D [--batches ..] [--lrs ..] [--rank-grid ..]
//   mcnn eval        --checkpoint C --dataset D [--out report] [--map map.png]
//   mcnn ablate      --dataset D [--arm mapping|raw|per-patch-td|all] [--out DIR]
//
// Exit codes: 0 ok, 2 bad arguments, 3 data/format error, 4 non-convergence.

#include "mcnn/commands.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

namespace {

using namespace mcnn;
using namespace mcnn::cli;

constexpr int kArgumentError = 2;
constexpr int kDataError = 3;
constexpr int kNumericError = 4;

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, sep);)
        if (!item.empty()) out.push_back(item);
    return out;
}

std::size_t parse_size(const std::string& s, const char* what) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty() || s[0] == '-')
        throw ArgumentError(std::string(what) + ": expected a non-negative integer, got \"" + s + "\"");
    return static_cast<std::size_t>(v);
}

double parse_double(const std::string& s, const char* what) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size()) throw ArgumentError(std::string(what) + ": expected a number, got \"" + s + "\"");
    return v;
}

Shape3 parse_ranks(const std::string& s) {
    const auto parts = split_on(s, ',');
    if (parts.size() != 3) throw ArgumentError("--ranks: expected R1,R2,R3, got \"" + s + "\"");
    return {parse_size(parts[0], "--ranks"), parse_size(parts[1], "--ranks"), parse_size(parts[2], "--ranks")};
}

// Flags shared by every command that trains or fits on a dataset.
struct Common {
    std::string dataset;
    std::string config;
    std::string ranks;
    std::size_t batch = 0;
    double lr = 0;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    CLI::Option* batch_opt = nullptr;
    CLI::Option* lr_opt = nullptr;
    CLI::Option* epochs_opt = nullptr;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* app) {
        app->add_option("--dataset", dataset, "Dataset: an .hst cube or a JSON descriptor")->required();
        app->add_option("--config", config, "JSON config overlay (keys as in configs/*.json)");
        app->add_option("--ranks", ranks, "Mapping ranks R1,R2,R3");
        batch_opt = app->add_option("--batch", batch, "Mini-batch size");
        lr_opt = app->add_option("--lr", lr, "Adam learning rate");
        epochs_opt = app->add_option("--epochs", epochs, "Training epochs");
        seed_opt = app->add_option("--seed", seed, "Seed for split, mapping init, weights and shuffling");
    }

    Overrides overrides() const {
        Overrides o;
        if (!config.empty()) o.config = config;
        if (!ranks.empty()) o.ranks = parse_ranks(ranks);
        if (*batch_opt) o.batch = batch;
        if (*lr_opt) o.lr = lr;
        if (*epochs_opt) o.epochs = epochs;
        if (*seed_opt) o.seed = seed;
        return o;
    }
};

void finish(const CommandOutput& out) {
    out.commit();
    std::cout << out.text;
}

std::vector<InputMode> parse_arms(const std::string& s) {
    if (s == "all") return {InputMode::mapping, InputMode::raw, InputMode::per_patch_td};
    std::vector<InputMode> arms;
    for (const auto& a : split_on(s, ',')) arms.push_back(parse_input_mode(a));
    if (arms.empty()) throw ArgumentError("--arm: no arm given");
    return arms;
}

SplitTag parse_split(const std::string& s) {
    if (s == "train") return SplitTag::train;
    if (s == "val") return SplitTag::val;
    if (s == "test") return SplitTag::test;
    throw ArgumentError("--split: expected train, val or test, got \"" + s + "\"");
}

int run(int argc, char** argv) {
    CLI::App app{"Mapping-layer CNN for hyperspectral image classification"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    // synth
    SynthSpec spec;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic labeled cube (.hst)");
    synth->add_option("--out", synth_out, "Output .hst path")->required();
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--classes", spec.classes, "Number of classes")->capture_default_str();
    synth->add_option("--height", spec.height, "Rows")->capture_default_str();
    synth->add_option("--width", spec.width, "Columns")->capture_default_str();
    synth->add_option("--bands", spec.bands, "Spectral bands")->capture_default_str();
    synth->add_option("--noise", spec.noise, "Per-band Gaussian noise stddev")->capture_default_str();
    synth->add_option("--blobs", spec.blobs_per_class, "Spatial blobs per class")->capture_default_str();

    // fit-mapping
    Common fit_c;
    std::string fit_out;
    auto* fitm = app.add_subcommand("fit-mapping", "Fit the mapping layers on the averaged training patch");
    fit_c.attach(fitm);
    fitm->add_option("--out", fit_out, "Output MAP1 path")->required();

    // train
    Common train_c;
    std::string train_out, train_arm = "mapping";
    std::size_t repeats = 1, jobs = 1;
    auto* train = app.add_subcommand("train", "Train and save checkpoint.mcnn plus train_log.tsv");
    train_c.attach(train);
    train->add_option("--out", train_out, "Output directory")->required();
    train->add_option("--repeats", repeats, "Independent runs with seeds seed..seed+K-1")->capture_default_str();
    train->add_option("--jobs", jobs, "Run repeats in parallel on this many threads")->capture_default_str();
    train->add_option("--arm", train_arm, "Input arm: mapping, raw or per-patch-td")->capture_default_str();

    // validate
    Common val_c;
    std::string batches = "20,30,40", lrs = "0.01,0.003,0.001,0.0003,0.0001", rank_grid, val_out;
    auto* validate = app.add_subcommand("validate", "Grid search on the validation split");
    val_c.attach(validate);
    validate->add_option("--batches", batches, "Comma-separated batch sizes")->capture_default_str();
    validate->add_option("--lrs", lrs, "Comma-separated learning rates")->capture_default_str();
    validate->add_option("--rank-grid", rank_grid,
                         "Semicolon-separated rank triples, e.g. 3,3,4;5,5,8 (replaces the batch/lr grid)");
    validate->add_option("--out", val_out, "Write the grid report here");

    // eval
    std::string ck_path, eval_dataset, eval_out, eval_map, eval_split = "test";
    auto* eval = app.add_subcommand("eval", "Score a checkpoint; optional classification map");
    eval->add_option("--checkpoint", ck_path, "checkpoint.mcnn from train")->required();
    eval->add_option("--dataset", eval_dataset, "Dataset the checkpoint was trained on")->required();
    eval->add_option("--split", eval_split, "train, val or test")->capture_default_str();
    eval->add_option("--out", eval_out, "Write the metrics report here");
    eval->add_option("--map", eval_map, "Write an indexed-colour PNG of predictions here");

    // ablate
    Common abl_c;
    std::string abl_arm = "all", abl_out;
    auto* ablate = app.add_subcommand("ablate", "Compare mapping layers against raw and per-patch inputs");
    abl_c.attach(ablate);
    ablate->add_option("--arm", abl_arm, "mapping, raw, per-patch-td, a comma list, or all")->capture_default_str();
    ablate->add_option("--out", abl_out, "Output directory for ablation.tsv and ablation_timing.tsv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kArgumentError;
    }

    if (*synth) {
        finish(cmd_synth(spec, synth_seed, synth_out));
    } else if (*fitm) {
        const Dataset d = load_dataset(fit_c.dataset);
        const McnnConfig cfg = resolve_config(d, fit_c.overrides());
        finish(cmd_fit_mapping(d, cfg, fit_out).output);
    } else if (*train) {
        const InputMode mode = parse_input_mode(train_arm);
        const Dataset d = load_dataset(train_c.dataset);
        const McnnConfig cfg = resolve_config(d, train_c.overrides(), mode);
        finish(cmd_train(d, cfg, train_out, repeats, mode, jobs).output);
    } else if (*validate) {
        const Dataset d = load_dataset(val_c.dataset);
        const McnnConfig cfg = resolve_config(d, val_c.overrides());
        std::vector<GridCell> grid;
        if (!rank_grid.empty()) {
            std::vector<Shape3> ranks;
            for (const auto& r : split_on(rank_grid, ';')) ranks.push_back(parse_ranks(r));
            grid = rank_grid_cells(cfg, ranks);
        } else {
            std::vector<std::size_t> bs;
            std::vector<double> ls;
            for (const auto& b : split_on(batches, ',')) bs.push_back(parse_size(b, "--batches"));
            for (const auto& l : split_on(lrs, ',')) ls.push_back(parse_double(l, "--lrs"));
            grid = hyper_grid(cfg, bs, ls);
        }
        std::optional<fs::path> out;
        if (!val_out.empty()) out = val_out;
        finish(cmd_validate(d, cfg, std::move(grid), out).output);
    } else if (*eval) {
        const SplitTag tag = parse_split(eval_split);
        const Checkpoint ck = load_checkpoint(ck_path);
        const Dataset d = load_dataset(eval_dataset);
        std::optional<fs::path> out, map;
        if (!eval_out.empty()) out = eval_out;
        if (!eval_map.empty()) map = eval_map;
        finish(cmd_eval(ck, d, tag, out, map).output);
    } else if (*ablate) {
        const auto arms = parse_arms(abl_arm);
        const Dataset d = load_dataset(abl_c.dataset);
        const McnnConfig cfg = resolve_config(d, abl_c.overrides());
        for (auto a : arms) resolve_config(d, abl_c.overrides(), a);
        std::optional<fs::path> out;
        if (!abl_out.empty()) out = abl_out;
        finish(cmd_ablate(d, cfg, arms, out).output);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kArgumentError;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericError;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
