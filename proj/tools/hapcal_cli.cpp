// Command-line front end for the calibration pipeline. Each subcommand maps
// to one step group of the procedure and exchanges artifacts through the
// output directory, so steps can be re-run or resumed individually.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hapcal/runner.hpp"

namespace {

namespace fs = std::filesystem;
using namespace hapcal;

struct CliOptions {
    std::string scene_file = "data/scene_default.json";
    std::string out_dir; // resolved after parse: flag > HAPCAL_OUT > "out"
    std::uint64_t seed = 1;
    std::vector<int> durations;
    bool skip_m2 = false;
    bool skip_m3 = false;
};

RunConfig make_config(const CliOptions& opt) {
    RunConfig cfg;
    cfg.out_dir = opt.out_dir;
    cfg.seed = opt.seed;
    if (!opt.durations.empty()) cfg.durations = opt.durations;
    cfg.train_m2 = !opt.skip_m2;
    cfg.train_m3 = !opt.skip_m3;
    cfg.validate();
    return cfg;
}

void note(const fs::path& path) {
    std::printf("wrote %s\n", path.string().c_str());
}

int cmd_locate(const CliOptions& opt) {
    const RunConfig cfg = make_config(opt);
    const Scene scene = load_scene(opt.scene_file);
    const AffineScreenMap map = step_locate(scene);
    save_screen_map(map, cfg.out_dir / artifact::screen_map);
    note(cfg.out_dir / artifact::screen_map);
    return 0;
}

int cmd_grid(const CliOptions& opt) {
    const RunConfig cfg = make_config(opt);
    const Scene scene = load_scene(opt.scene_file);
    const AffineScreenMap map =
        load_screen_map(cfg.out_dir / artifact::screen_map);
    const HeightGrid grid = step_grid(scene, map, cfg);
    save_height_grid(grid, cfg.out_dir / artifact::height_grid);
    note(cfg.out_dir / artifact::height_grid);
    return 0;
}

int cmd_collect(const CliOptions& opt) {
    const RunConfig cfg = make_config(opt);
    const Scene scene = load_scene(opt.scene_file);
    const AffineScreenMap map =
        load_screen_map(cfg.out_dir / artifact::screen_map);
    const HeightGrid grid =
        load_height_grid(cfg.out_dir / artifact::height_grid);
    const auto dataset = step_collect(scene, map, grid, cfg);
    save_dataset(dataset, scene.chain.dof(), cfg.out_dir / artifact::dataset);
    note(cfg.out_dir / artifact::dataset);
    return 0;
}

int cmd_train(const CliOptions& opt) {
    const RunConfig cfg = make_config(opt);
    const Scene scene = load_scene(opt.scene_file);
    const auto dataset =
        load_dataset(cfg.out_dir / artifact::dataset, scene.chain.dof());
    const TrainOutputs models = step_train(dataset, cfg);
    save_train_outputs(models, cfg);
    if (cfg.train_m2) note(cfg.out_dir / artifact::model_m2);
    if (cfg.train_m3) note(cfg.out_dir / artifact::model_m3);
    note(cfg.out_dir / artifact::cv);
    return 0;
}

int cmd_eval(const CliOptions& opt) {
    const RunConfig cfg = make_config(opt);
    const Scene scene = load_scene(opt.scene_file);
    const AffineScreenMap map =
        load_screen_map(cfg.out_dir / artifact::screen_map);
    const HeightGrid grid =
        load_height_grid(cfg.out_dir / artifact::height_grid);
    TrainOutputs models;
    if (cfg.train_m2)
        models.m2 = load_model(cfg.out_dir / artifact::model_m2);
    if (cfg.train_m3)
        models.m3 = load_model(cfg.out_dir / artifact::model_m3);
    const EvalOutputs eval = step_eval(scene, map, grid, models, cfg);
    save_eval_outputs(eval, scene, cfg);
    for (const DeviationReport& r : eval.reports)
        note(cfg.out_dir / artifact::report(r.model, r.duration));
    note(cfg.out_dir / artifact::table);
    note(cfg.out_dir / artifact::summary);
    return 0;
}

int cmd_run_all(const CliOptions& opt) {
    const RunConfig cfg = make_config(opt);
    const Scene scene = load_scene(opt.scene_file);
    const RunArtifacts art = run_full_procedure(scene, cfg);
    note(cfg.out_dir / artifact::screen_map);
    note(cfg.out_dir / artifact::height_grid);
    note(cfg.out_dir / artifact::dataset);
    if (cfg.train_m2) note(cfg.out_dir / artifact::model_m2);
    if (cfg.train_m3) note(cfg.out_dir / artifact::model_m3);
    note(cfg.out_dir / artifact::cv);
    for (const DeviationReport& r : art.eval.reports)
        note(cfg.out_dir / artifact::report(r.model, r.duration));
    note(cfg.out_dir / artifact::table);
    note(cfg.out_dir / artifact::summary);
    note(cfg.out_dir / artifact::scatter_m1);
    if (cfg.train_m3) note(cfg.out_dir / artifact::scatter_m3);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Touchscreen-based haptic calibration pipeline"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--scene", opt.scene_file, "Scene description JSON")
        ->capture_default_str();
    app.add_option("--out", opt.out_dir,
                   "Output directory for artifacts (HAPCAL_OUT overrides the "
                   "default; this flag overrides both)")
        ->envname("HAPCAL_OUT");
    app.add_option("--seed", opt.seed, "Experiment seed")
        ->capture_default_str();
    app.add_option("--duration", opt.durations,
                   "Touch duration in seconds (repeatable; default 1 and 2)");
    app.add_flag("--skip-m2", opt.skip_m2, "Skip the M2 network");
    app.add_flag("--skip-m3", opt.skip_m3, "Skip the M3 network");

    const struct {
        const char* name;
        const char* help;
        int (*run)(const CliOptions&);
    } commands[] = {
        {"locate", "Guide to the 3 edge markers and fit the screen map",
         cmd_locate},
        {"grid", "Probe the touch-height lattice", cmd_grid},
        {"collect", "Gather the M1-commanded training dataset", cmd_collect},
        {"train", "Fit and cross-validate the M2/M3 networks", cmd_train},
        {"eval", "Evaluate all models on fresh targets", cmd_eval},
        {"run-all", "Execute the full six-step procedure", cmd_run_all},
    };
    for (const auto& c : commands)
        app.add_subcommand(c.name, c.help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // usage problems share the config exit code
    }
    if (opt.out_dir.empty()) opt.out_dir = "out";

    const CLI::App* sub = app.get_subcommands().front();
    try {
        for (const auto& c : commands)
            if (sub->get_name() == c.name) return c.run(opt);
        return 2; // unreachable: require_subcommand guarantees a match
    } catch (const MissingArtifact& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", sub->get_name().c_str(),
                     e.what());
        return 3;
    }
}
