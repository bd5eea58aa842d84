#include "torstab/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

#include "torstab/io.hpp"
#include "torstab/quadrature.hpp"
#include "torstab/rng.hpp"

namespace torstab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::pair<std::string, std::string>> meta_for(const RunConfig& cfg) {
    return {{"config_digest", config_digest(cfg)}};
}

json shift_json(const RunConfig& cfg) {
    json j;
    j["kind"] = shift_kind(cfg.shift);
    if (const auto* g = std::get_if<GaussianVelocityShift>(&cfg.shift)) j["sigma"] = g->sigma;
    if (const auto* c = std::get_if<CompactVelocityShift>(&cfg.shift)) j["delta_m"] = c->delta_m;
    if (const auto* e = std::get_if<EnergySphereShift>(&cfg.shift)) {
        j["r_max"] = e->r_max;
        j["auto_r_max"] = cfg.energy_sphere_auto_rmax;
    }
    return j;
}

json rejections_json(const RejectionStats& r) {
    return json{{"distance_floor", r.distance_floor},
                {"energy_drift", r.energy_drift},
                {"non_finite", r.non_finite},
                {"shift_infeasible", r.shift_infeasible},
                {"total", r.total()},
                {"halvings_histogram", r.halvings_histogram}};
}

json theorem_json(const ResolvedTheoremParams& t) {
    return json{{"epsilon", t.epsilon},
                {"delta_n", t.delta_n},
                {"a_exponent", t.a_exponent},
                {"neighbor_l", t.neighbor_l},
                {"l_capped", t.l_capped},
                {"epsilon_out_of_range", t.epsilon_out_of_range},
                {"below_theorem_regime", t.below_theorem_regime},
                {"c_beta", t.c_beta},
                {"c_beta_a", t.c_beta_a},
                {"c_beta_half", t.c_beta_half}};
}

struct TrajectoryDump {
    std::vector<double> t, idx, x, y, z, vx, vy, vz;

    void add(double time, const PhaseState& s) {
        for (int i = 0; i < s.n(); ++i) {
            t.push_back(time);
            idx.push_back(i);
            x.push_back(s.x[i].x);
            y.push_back(s.x[i].y);
            z.push_back(s.x[i].z);
            vx.push_back(s.v[i].x);
            vy.push_back(s.v[i].y);
            vz.push_back(s.v[i].z);
        }
    }
    std::vector<CsvColumn> columns() const {
        return {{"t", t},  {"particle", idx}, {"x", x},   {"y", y},
                {"z", z},  {"vx", vx},        {"vy", vy}, {"vz", vz}};
    }
    void clear() {
        t.clear(); idx.clear(); x.clear(); y.clear();
        z.clear(); vx.clear(); vy.clear(); vz.clear();
    }
};

// Shared by run_qcurve / run_position_recipe / sweep cells.
RunOutcome qcurve_into(const RunConfig& cfg, const fs::path& dir, double preroll_tau,
                       QEstimate* est_out = nullptr) {
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(dir);

    GibbsParams params = cfg.gibbs_params();
    ShiftSpec shift = cfg.resolved_shift(cfg.n);

    QOptions opts;
    opts.preroll_tau = preroll_tau;
    TrajectoryDump dump_a, dump_b;
    if (cfg.dump_trajectories) {
        opts.dump_observer = [&](int k, double t, const PhaseState& a, const PhaseState& b) {
            if (k == 0) {  // restart after a halving: drop the stale attempt
                dump_a.clear();
                dump_b.clear();
            }
            dump_a.add(t, a);
            dump_b.add(t, b);
        };
    }

    QEstimate est = estimate_q(params, cfg.chain, shift, cfg.theorem, cfg.integrator, cfg.mc, opts);
    GrowthFit fit = fit_linear_growth(est.curve);

    auto meta = meta_for(cfg);
    write_csv((dir / "qcurve.csv").string(), meta,
              {{"t", est.curve.times},
               {"q", est.curve.q},
               {"q_stderr", est.curve.q_stderr},
               {"m_effective", std::vector<double>(est.curve.m_effective.begin(),
                                                   est.curve.m_effective.end())}});
    if (!est.proof.times.empty()) {
        write_csv((dir / "proof_terms.csv").string(), meta,
                  {{"t", est.proof.times},
                   {"s1", est.proof.s1},
                   {"s1_stderr", est.proof.s1_stderr},
                   {"s1_delta", est.proof.s1_delta},
                   {"s1_delta_stderr", est.proof.s1_delta_stderr},
                   {"s2_majorant", est.proof.s2_majorant},
                   {"s2_majorant_stderr", est.proof.s2_majorant_stderr}});
    }
    if (!est.overlap_mean.empty()) {
        write_csv((dir / "overlap.csv").string(), meta,
                  {{"t", est.curve.times},
                   {"overlap", est.overlap_mean},
                   {"overlap_stderr", est.overlap_stderr}});
    }
    if (cfg.dump_trajectories) {
        write_csv((dir / "trajectory_base.csv").string(), meta, dump_a.columns());
        write_csv((dir / "trajectory_shifted.csv").string(), meta, dump_b.columns());
    }

    if (cfg.emit_svg) {
        SvgSeries data{"Q(t)", "#1f6fb2", est.curve.times, est.curve.q, est.curve.q_stderr, false};
        SvgSeries lsq{"weighted fit", "#c24a18", {}, {}, {}, true};
        SvgSeries env{"envelope", "#3a9b48", {}, {}, {}, true};
        for (double t : est.curve.times) {
            lsq.x.push_back(t);
            lsq.y.push_back(fit.intercept + fit.slope * t);
            env.x.push_back(t);
            env.y.push_back(est.curve.q.front() + fit.envelope_slope * (t - est.curve.times[0]));
        }
        write_svg_plot((dir / "qcurve.svg").string(),
                       "Q(t), N=" + std::to_string(cfg.n), "t", "Q", {data, lsq, env},
                       meta);
    }

    json summary;
    summary["config_digest"] = config_digest(cfg);
    summary["n"] = cfg.n;
    summary["alpha"] = cfg.alpha;
    summary["beta"] = cfg.beta;
    summary["shift"] = shift_json(cfg);
    summary["theorem"] = theorem_json(est.theorem);
    summary["samples"] = est.curve.samples_requested;
    summary["samples_rejected"] = est.curve.samples_rejected;
    summary["rejections"] = rejections_json(est.rejections);
    summary["q0"] = est.curve.q.front();
    summary["slope"] = fit.slope;
    summary["slope_stderr"] = fit.slope_stderr;
    summary["intercept"] = fit.intercept;
    summary["envelope_slope"] = fit.envelope_slope;
    summary["envelope_max_positive_residual"] = fit.envelope_max_positive_residual;
    summary["max_positive_residual"] = fit.max_positive_residual;
    summary["max_velocity_term"] = est.max_velocity_term;
    summary["shift_norm1_mean_t0"] = est.shift_norm1_mean;
    summary["shift_position_share_t0"] = est.shift_position_share;
    summary["tau"] = preroll_tau;
    summary["warnings"] = est.warnings;
    summary["wall_seconds"] = seconds_since(t0);

    RunOutcome out;
    out.summary = summary;
    out.summary_path = (dir / "qcurve_summary.json").string();
    write_text_file(out.summary_path, summary.dump(2) + "\n");
    if (est_out) *est_out = std::move(est);
    return out;
}

}  // namespace

RunOutcome run_qcurve(const RunConfig& cfg) { return qcurve_into(cfg, cfg.out_dir, 0.0); }

RunOutcome run_position_recipe(const RunConfig& cfg) {
    return qcurve_into(cfg, cfg.out_dir, cfg.tau);
}

RunOutcome run_checks(const RunConfig& cfg, const std::string& which) {
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg.out_dir);
    fs::path dir = cfg.out_dir;
    RunOutcome out;
    json summary;
    summary["config_digest"] = config_digest(cfg);
    bool failed = false;

    if (which == "potential") {
        PotentialSpec spec = make_potential(cfg.alpha, cfg.amplitude, cfg.image_shells,
                                            cfg.taper_radius);
        auto bounds = certify_derivative_bounds(spec);
        auto pm = estimate_phi_min(spec, 128);
        // Mean-zero verification on a midpoint grid, independent of the
        // calibration path.
        double mean = integrate_torus_even(
            [&](double x, double y, double z) { return potential_value(spec, {x, y, z}); }, 64);
        bool mean_ok = std::abs(mean) < 1e-6;
        bool bounds_ok = bounds.finite;
        failed = !(mean_ok && bounds_ok);
        summary["potential"] = {
            {"alpha", spec.alpha},
            {"amplitude", spec.amplitude},
            {"image_shells", spec.image_shells},
            {"taper_radius", spec.taper_radius},
            {"mean_shift", spec.mean_shift},
            {"phi_min", spec.phi_min},
            {"phi_min_margin", pm.margin},
            {"grid_mean", mean},
            {"mean_zero_pass", mean_ok},
            {"derivative_bounds",
             {{"c0", bounds.c0},
              {"c1", bounds.c1},
              {"c2", bounds.c2},
              {"finite", bounds.finite},
              {"r_min", bounds.r_min},
              {"r_max", bounds.r_max},
              {"radii", bounds.radii},
              {"directions", bounds.directions}}},
            {"status", failed ? "fail" : "pass"}};
        out.summary_path = (dir / "potential_report.json").string();
    } else if (which == "gibbs") {
        GibbsParams params = cfg.gibbs_params();
        GibbsParams pair_params = params;
        pair_params.n = 2;  // quadrature-tractable partition check
        auto part = verify_partition_bounds(pair_params, cfg.quad_base_n);
        json marg = json::array();
        bool marg_fail = false, inconclusive = part.status == CheckStatus::inconclusive;
        for (int k = 1; k <= 2; ++k) {
            RngEngine rng = make_engine(cfg.mc.seed, k, "marginal-check");
            auto rep = verify_marginal_bounds(params, k, cfg.marginal_samples, cfg.chain, rng,
                                              cfg.marginal_bins);
            marg_fail = marg_fail || rep.status == CheckStatus::fail;
            {
                // flat histogram table: bin center triple + density + stderr
                const int b = rep.bins_per_axis;
                std::vector<CsvColumn> cols(5);
                const char* names[] = {"x", "y", "z", "density", "density_stderr"};
                for (int c = 0; c < 5; ++c) cols[c].name = names[c];
                for (int ix = 0; ix < b; ++ix)
                    for (int iy = 0; iy < b; ++iy)
                        for (int iz = 0; iz < b; ++iz) {
                            long idx = (static_cast<long>(ix) * b + iy) * b + iz;
                            cols[0].values.push_back((ix + 0.5) / b);
                            cols[1].values.push_back((iy + 0.5) / b);
                            cols[2].values.push_back((iz + 0.5) / b);
                            cols[3].values.push_back(rep.bin_density[idx]);
                            cols[4].values.push_back(rep.bin_se[idx]);
                        }
                write_csv((dir / ("marginal_k" + std::to_string(k) + ".csv")).string(),
                          meta_for(cfg), cols);
            }
            marg.push_back({{"k", k},
                            {"bound", rep.bound},
                            {"sup_density", rep.sup_density},
                            {"sup_density_se", rep.sup_density_se},
                            {"min_density", rep.min_density},
                            {"samples", rep.samples},
                            {"bins_per_axis", rep.bins_per_axis},
                            {"low_count_bins", rep.low_count_bins},
                            {"widened", rep.widened},
                            {"acceptance_rate", rep.chain.acceptance_rate},
                            {"stationary", rep.chain.stationary},
                            {"status", to_string(rep.status)}});
        }
        failed = part.status == CheckStatus::fail || marg_fail;
        summary["partition_n2"] = {{"b2x", part.b2x},
                                   {"quad_error", part.quad_error},
                                   {"quad_converged", part.quad_converged},
                                   {"b2", part.b2},
                                   {"lower_bound", part.lower_bound},
                                   {"upper_bound", part.upper_bound},
                                   {"lower_margin", part.lower_margin},
                                   {"upper_margin", part.upper_margin},
                                   {"status", to_string(part.status)}};
        summary["marginals"] = marg;
        summary["status"] = failed ? "fail" : (inconclusive ? "inconclusive" : "pass");
        out.summary_path = (dir / "gibbs_report.json").string();
    } else if (which == "shift") {
        GibbsParams params = cfg.gibbs_params();
        RngEngine rng = make_engine(cfg.mc.seed, 0, "condition-check");
        auto rep = verify_condition_psi2(params, cfg.resolved_shift(cfg.n), cfg.condition_samples,
                                         cfg.chain, rng);
        failed = rep.status == CheckStatus::fail;
        summary["condition"] = {{"kind", rep.kind},
                                {"beta_prime", rep.beta_prime},
                                {"gamma", rep.gamma},
                                {"empirical_max_ratio", rep.empirical_max_ratio},
                                {"k_rigorous", rep.k_rigorous},
                                {"k_statement", rep.k_statement},
                                {"k_proof_variant", rep.k_proof_variant},
                                {"max_kinetic_error", rep.max_kinetic_error},
                                {"samples", rep.samples},
                                {"status", to_string(rep.status)},
                                {"note", rep.note}};
        out.summary_path = (dir / "shift_report.json").string();
    } else {
        throw config_error("unknown check '" + which + "' (gibbs | shift | potential)");
    }

    summary["wall_seconds"] = seconds_since(t0);
    out.summary = summary;
    write_text_file(out.summary_path, summary.dump(2) + "\n");
    out.exit_code = failed ? 3 : 0;
    return out;
}

RunOutcome run_sweep(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    fs::path dir = cfg.out_dir;
    fs::create_directories(dir / "cells");

    auto ns = cfg.sweep_n.empty() ? std::vector<int>{cfg.n} : cfg.sweep_n;
    auto alphas = cfg.sweep_alpha.empty() ? std::vector<double>{cfg.alpha} : cfg.sweep_alpha;
    auto betas = cfg.sweep_beta.empty() ? std::vector<double>{cfg.beta} : cfg.sweep_beta;
    auto epsilons = cfg.sweep_epsilon.empty() ? std::vector<double>{cfg.theorem.epsilon}
                                              : cfg.sweep_epsilon;
    std::vector<double> sigmas;
    if (!cfg.sweep_sigma.empty()) {
        sigmas = cfg.sweep_sigma;
    } else if (const auto* g = std::get_if<GaussianVelocityShift>(&cfg.shift)) {
        sigmas = {g->sigma};
    } else {
        sigmas = {0.0};  // non-Gaussian shift: sigma axis collapses
    }

    json cells = json::array();
    std::vector<CsvColumn> table(9);
    const char* names[] = {"n",        "alpha",          "beta",
                           "epsilon",  "sigma",          "q0",
                           "slope",    "envelope_slope", "s2_majorant_timeavg"};
    for (int i = 0; i < 9; ++i) table[i].name = names[i];

    std::vector<SvgSeries> overlay;
    static const char* palette[] = {"#1f6fb2", "#c24a18", "#3a9b48", "#8454a3",
                                    "#a0273f", "#2a8f8f", "#7d6608", "#444444"};
    double env_min = 0, env_max = 0, s2_min = 0, s2_max = 0;
    bool first_cell = true;
    long cell_index = 0;

    for (int n : ns)
        for (double alpha : alphas)
            for (double beta : betas)
                for (double eps : epsilons)
                    for (double sigma : sigmas) {
                        RunConfig cell = cfg;
                        cell.n = n;
                        cell.alpha = alpha;
                        cell.beta = beta;
                        cell.theorem.epsilon = eps;
                        cell.sweep_n.clear();
                        cell.sweep_alpha.clear();
                        cell.sweep_beta.clear();
                        cell.sweep_epsilon.clear();
                        cell.sweep_sigma.clear();
                        if (sigma > 0.0) cell.shift = GaussianVelocityShift{sigma};
                        cell.mc.seed = derive_seed(cfg.mc.seed, cell_index, "sweep-cell");

                        std::string label = "n" + std::to_string(n) + "_alpha" +
                                            format_double(alpha) + "_beta" + format_double(beta) +
                                            "_eps" + format_double(eps);
                        if (sigma > 0.0) label += "_sigma" + format_double(sigma);
                        fs::path cell_dir = dir / "cells" / label;

                        QEstimate est;
                        RunOutcome cell_out = qcurve_into(cell, cell_dir, cfg.tau, &est);

                        double s2_avg = 0.0;
                        if (!est.proof.s2_majorant.empty()) {
                            for (double v : est.proof.s2_majorant) s2_avg += v;
                            s2_avg /= est.proof.s2_majorant.size();
                        }
                        double env = cell_out.summary["envelope_slope"].get<double>();
                        if (first_cell) {
                            env_min = env_max = env;
                            s2_min = s2_max = s2_avg;
                            first_cell = false;
                        } else {
                            env_min = std::min(env_min, env);
                            env_max = std::max(env_max, env);
                            s2_min = std::min(s2_min, s2_avg);
                            s2_max = std::max(s2_max, s2_avg);
                        }

                        table[0].values.push_back(n);
                        table[1].values.push_back(alpha);
                        table[2].values.push_back(beta);
                        table[3].values.push_back(eps);
                        table[4].values.push_back(sigma);
                        table[5].values.push_back(cell_out.summary["q0"].get<double>());
                        table[6].values.push_back(cell_out.summary["slope"].get<double>());
                        table[7].values.push_back(env);
                        table[8].values.push_back(s2_avg);

                        json cj = cell_out.summary;
                        cj["label"] = label;
                        cj["s2_majorant_timeavg"] = s2_avg;
                        cells.push_back(cj);

                        if (cfg.emit_svg && overlay.size() < 8) {
                            QCurve& c = est.curve;
                            overlay.push_back({label, palette[overlay.size() % 8], c.times, c.q,
                                               c.q_stderr, false});
                        }
                        ++cell_index;
                    }

    auto meta = meta_for(cfg);
    write_csv((dir / "sweep_summary.csv").string(), meta, table);
    if (cfg.emit_svg && !overlay.empty())
        write_svg_plot((dir / "sweep.svg").string(), "Q(t) across sweep cells", "t", "Q", overlay,
                       meta);

    json summary;
    summary["config_digest"] = config_digest(cfg);
    summary["cells"] = cells;
    summary["cell_count"] = cell_index;
    summary["envelope_slope_ratio"] = env_min > 0.0 ? env_max / env_min : 0.0;
    summary["s2_majorant_timeavg_ratio"] = s2_min > 0.0 ? s2_max / s2_min : 0.0;
    summary["wall_seconds"] = seconds_since(t0);

    RunOutcome out;
    out.summary = summary;
    out.summary_path = (dir / "sweep_summary.json").string();
    write_text_file(out.summary_path, summary.dump(2) + "\n");
    return out;
}

}  // namespace torstab
