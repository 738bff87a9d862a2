// Desk-scale run: synthetic cube -> mapping fit -> MCNN, scored on the test split.
//   desk_demo [seed] [noise]
#include "mcnn/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    using namespace mcnn;
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;
    SynthSpec spec;
    spec.noise = argc > 2 ? std::strtod(argv[2], nullptr) : 1.4;

    const HsiCube cube = synth_cube(spec, seed);
    McnnConfig cfg = synthetic_config();
    cfg.seed = seed;
    std::printf("cube %zux%zux%zu, %zu classes, noise %.2f, seed %llu\n", cube.height(), cube.width(), cube.bands(),
                cube.class_count(), spec.noise, static_cast<unsigned long long>(seed));

    const auto r = cli::run_pipeline(cube, cfg, InputMode::mapping);
    const auto& m = r.checkpoint.model.mapping;
    std::printf("mapping %s -> %s: %zu iterations, last core delta %.4g\n", to_string(m.input_dims).c_str(),
                to_string(m.ranks).c_str(), m.iterations_used, m.final_core_delta);
    for (const auto& e : r.log.epochs)
        if (e.epoch % 5 == 0)
            std::printf("epoch %2zu  loss %.4f  val OA %.2f%%\n", e.epoch, e.mean_loss, e.val_oa ? 100 * *e.val_oa : 0.0);
    std::cout << cli::format_metrics(r.test_confusion, cube.class_names);
    std::printf("preprocessing %.2f s, total %.2f s (hardware-dependent)\n", r.preprocessing_seconds, r.total_seconds);
}
