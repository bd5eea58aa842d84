// Command-line driver for the trajectory-stability lab.

#include <cstdint>
#include <iostream>

#include "CLI11.hpp"
#include "torstab/harness.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = -1;
    bool dump_trajectories = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "run configuration file")->required();
    cmd->add_option("--out", f.out_dir, "output directory (overrides output.dir)");
    cmd->add_option("--seed", f.seed, "master seed (overrides monte_carlo.seed)")
        ->each([&f](const std::string&) { f.seed_set = true; });
    cmd->add_option("--workers", f.workers, "worker threads, 0 = hardware");
    cmd->add_flag("--dump-trajectories", f.dump_trajectories,
                  "write sample 0's pair trajectory as CSV");
}

torstab::RunConfig load_with_overrides(const CommonFlags& f) {
    torstab::RunConfig cfg = torstab::load_config(f.config_path);
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    if (f.seed_set) cfg.mc.seed = f.seed;
    if (f.workers >= 0) cfg.mc.workers = f.workers;
    if (f.dump_trajectories) cfg.dump_trajectories = true;
    return cfg;
}

int dispatch(const std::function<torstab::RunOutcome(const torstab::RunConfig&)>& run,
             const CommonFlags& flags) {
    try {
        torstab::RunConfig cfg = load_with_overrides(flags);
        torstab::RunOutcome out = run(cfg);
        std::cout << out.summary_path << "\n";
        return out.exit_code;
    } catch (const torstab::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo laboratory for paired-trajectory stability of mean-field "
                 "particle dynamics on the torus"};
    app.require_subcommand(1);

    CommonFlags f_q, f_gibbs, f_shift, f_pot, f_recipe, f_sweep;
    auto* c_q = app.add_subcommand("qcurve", "estimate the log-divergence curve Q(t)");
    add_common(c_q, f_q);
    auto* c_gibbs = app.add_subcommand("check-gibbs",
                                       "partition-function and marginal bound checks");
    add_common(c_gibbs, f_gibbs);
    auto* c_shift = app.add_subcommand("check-shift", "image-measure condition checks");
    add_common(c_shift, f_shift);
    auto* c_pot = app.add_subcommand("check-potential",
                                     "derivative bounds, zero mean and phi_min");
    add_common(c_pot, f_pot);
    auto* c_recipe = app.add_subcommand("position-recipe",
                                        "position shifts via a velocity shift at t = -tau");
    add_common(c_recipe, f_recipe);
    auto* c_sweep = app.add_subcommand("sweep", "cross product over list-valued parameters");
    add_common(c_sweep, f_sweep);

    CLI11_PARSE(app, argc, argv);

    if (c_q->parsed()) return dispatch(torstab::run_qcurve, f_q);
    if (c_gibbs->parsed())
        return dispatch([](const torstab::RunConfig& c) { return torstab::run_checks(c, "gibbs"); },
                        f_gibbs);
    if (c_shift->parsed())
        return dispatch([](const torstab::RunConfig& c) { return torstab::run_checks(c, "shift"); },
                        f_shift);
    if (c_pot->parsed())
        return dispatch(
            [](const torstab::RunConfig& c) { return torstab::run_checks(c, "potential"); }, f_pot);
    if (c_recipe->parsed()) return dispatch(torstab::run_position_recipe, f_recipe);
    if (c_sweep->parsed()) return dispatch(torstab::run_sweep, f_sweep);
    return 0;
}
