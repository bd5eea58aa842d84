#include "torstab/gibbs.hpp"

#include <algorithm>
#include <cmath>

#include "torstab/geometry.hpp"
#include "torstab/quadrature.hpp"

namespace torstab {

std::vector<Vec3> sample_velocities(const GibbsParams& params, RngEngine& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(params.beta));
    std::vector<Vec3> v(params.n);
    for (auto& vi : v) vi = {gauss(rng), gauss(rng), gauss(rng)};
    return v;
}

namespace {

// Unscaled interaction sum of particle i with all others: sum_{j != i} phi.
double site_energy(const std::vector<Vec3>& x, int i, const Vec3& xi, const PotentialSpec& spec,
                   double singular_floor, bool& too_close) {
    double e = 0.0;
    too_close = false;
    for (int j = 0; j < static_cast<int>(x.size()); ++j) {
        if (j == i) continue;
        Vec3 d = torus_displacement(xi, x[j]);
        double r2 = norm_sq(d);
        if (r2 < singular_floor * singular_floor) {
            too_close = true;
            return 0.0;
        }
        e += potential_value(spec, d);
    }
    return e;
}

}  // namespace

ChainDiagnostics sample_positions_mcmc(
    const GibbsParams& params, const ChainConfig& cfg, long keep, RngEngine& rng,
    const std::function<void(long, const std::vector<Vec3>&)>& on_sample) {
    const int n = params.n;
    if (n < 2) throw std::invalid_argument("sample_positions_mcmc: need n >= 2");
    ChainDiagnostics diag;

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Vec3> x(n);
    for (auto& xi : x) xi = {uni(rng), uni(rng), uni(rng)};

    double step = cfg.proposal_step > 0.0 ? cfg.proposal_step
                                          : 0.25 / std::cbrt(static_cast<double>(n));
    const bool tune = cfg.proposal_step <= 0.0;
    const long burn_moves = cfg.burn_in_sweeps * n;
    const long thin_moves = std::max<long>(1, cfg.thin_sweeps * n);
    const long tune_until = burn_moves * 4 / 5;
    const long tune_window = std::max<long>(200, n);

    long accepted_window = 0, window_count = 0;
    long accepted_prod = 0, proposed_prod = 0;
    long kept = 0;

    // Interacting case only; for amplitude 0 every move is accepted and the
    // chain is exactly uniform.
    const bool free_case = params.spec.amplitude == 0.0;

    std::vector<double> epot_kept;
    if (keep > 0) epot_kept.reserve(keep);
    double epot_sum = 0.0;  // unscaled sum over unordered pairs
    if (!free_case) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                epot_sum += potential_value(params.spec, torus_displacement(x[i], x[j]));
    }

    long move = 0;
    const long total_moves = burn_moves + keep * thin_moves;
    std::uniform_int_distribution<int> pick(0, n - 1);
    while (move < total_moves) {
        ++move;
        int i = pick(rng);
        Vec3 prop = wrap_unit(x[i] + step * Vec3{gauss(rng), gauss(rng), gauss(rng)});
        bool accept;
        double delta = 0.0;
        if (free_case) {
            accept = true;
        } else {
            bool too_close_new = false, too_close_old = false;
            double e_new = site_energy(x, i, prop, params.spec, cfg.singular_floor, too_close_new);
            if (too_close_new) {
                accept = false;  // e^{-beta*phi} -> 0 at the singularity
            } else {
                double e_old = site_energy(x, i, x[i], params.spec, 0.0, too_close_old);
                delta = (e_new - e_old) / n;  // E_pot change under mean-field scaling
                accept = delta <= 0.0 || uni(rng) < std::exp(-params.beta * delta);
            }
        }
        if (accept) {
            x[i] = prop;
            epot_sum += delta * n;
            ++accepted_window;
        }
        ++window_count;

        const bool in_burn = move <= burn_moves;
        if (in_burn && tune && move <= tune_until && window_count >= tune_window) {
            double rate = static_cast<double>(accepted_window) / window_count;
            step *= std::exp(0.8 * (rate - cfg.target_acceptance));
            step = std::clamp(step, 1e-4, 0.5);
            accepted_window = 0;
            window_count = 0;
        }
        if (!in_burn) {
            ++proposed_prod;
            if (accept) ++accepted_prod;
            long since_burn = move - burn_moves;
            if (since_burn % thin_moves == 0 && kept < keep) {
                if (on_sample) on_sample(kept, x);
                epot_kept.push_back(epot_sum / n);
                ++kept;
            }
        }
        if (move == burn_moves) {
            accepted_window = 0;
            window_count = 0;
        }
    }

    diag.acceptance_rate =
        proposed_prod > 0 ? static_cast<double>(accepted_prod) / proposed_prod : 0.0;
    diag.burn_in_moves = burn_moves;
    diag.thin_moves = thin_moves;
    diag.proposal_step = step;

    // Windowed stationarity: means of E_pot over four production windows must
    // agree within 5 joint standard errors.
    const int windows = 4;
    long kn = static_cast<long>(epot_kept.size());
    if (kn >= windows * 8) {
        long w = kn / windows;
        for (int wi = 0; wi < windows; ++wi) {
            double m = 0.0, m2 = 0.0;
            for (long t = wi * w; t < (wi + 1) * w; ++t) m += epot_kept[t];
            m /= w;
            for (long t = wi * w; t < (wi + 1) * w; ++t) {
                double d = epot_kept[t] - m;
                m2 += d * d;
            }
            diag.window_mean_epot.push_back(m);
            diag.window_se_epot.push_back(std::sqrt(m2 / (w - 1) / w));
        }
        for (int a = 0; a < windows && diag.stationary; ++a)
            for (int b = a + 1; b < windows; ++b) {
                double se = std::hypot(diag.window_se_epot[a], diag.window_se_epot[b]);
                if (se > 0.0 &&
                    std::abs(diag.window_mean_epot[a] - diag.window_mean_epot[b]) > 5.0 * se) {
                    diag.stationary = false;
                    break;
                }
            }
    }
    return diag;
}

std::vector<Vec3> sample_positions_mcmc(const GibbsParams& params, const ChainConfig& cfg,
                                        RngEngine& rng, ChainDiagnostics* diag) {
    std::vector<Vec3> out;
    auto d = sample_positions_mcmc(params, cfg, 1, rng,
                                   [&](long, const std::vector<Vec3>& x) { out = x; });
    if (diag) *diag = d;
    return out;
}

PhaseState sample_gibbs(const GibbsParams& params, const ChainConfig& cfg, RngEngine& pos_rng,
                        RngEngine& vel_rng, ChainDiagnostics* diag) {
    PhaseState z;
    z.x = sample_positions_mcmc(params, cfg, pos_rng, diag);
    z.v = sample_velocities(params, vel_rng);
    return z;
}

std::string to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::inconclusive: return "inconclusive";
    }
    return "unknown";
}

PartitionBoundReport verify_partition_bounds(const GibbsParams& params, int quad_base_n) {
    if (params.n != 2)
        throw std::invalid_argument("verify_partition_bounds: quadrature check requires n = 2");
    PartitionBoundReport rep;
    const double beta = params.beta;
    const PotentialSpec& spec = params.spec;

    // For N = 2, E_pot(x1, x2) = phi(x1 - x2) / 2.
    auto quad = integrate_torus_richardson(
        [&](double x, double y, double z) {
            return std::exp(-0.5 * beta * potential_value(spec, {x, y, z}));
        },
        quad_base_n);
    rep.b2x = quad.value;
    rep.quad_error = quad.error;
    rep.quad_converged = quad.converged;

    double vel = std::pow(2.0 * M_PI / beta, 3.0);
    rep.b2 = vel * rep.b2x;
    rep.lower_bound = vel;
    rep.upper_bound = vel * std::exp(-beta * spec.phi_min);
    rep.lower_margin = rep.b2x - 1.0;
    rep.upper_margin = std::exp(-beta * spec.phi_min) - rep.b2x;

    if (!quad.converged) {
        rep.status = CheckStatus::inconclusive;
    } else {
        bool lower_ok = rep.lower_margin >= -quad.error;
        bool upper_ok = rep.upper_margin >= -quad.error;
        rep.status = (lower_ok && upper_ok) ? CheckStatus::pass : CheckStatus::fail;
    }
    return rep;
}

MarginalBoundReport verify_marginal_bounds(const GibbsParams& params, int k, long samples,
                                           const ChainConfig& cfg, RngEngine& rng,
                                           int bins_per_axis) {
    if (k != 1 && k != 2)
        throw std::invalid_argument("verify_marginal_bounds: only k = 1, 2 are histogram-estimable");
    MarginalBoundReport rep;
    rep.k = k;
    rep.samples = samples;
    rep.bound = std::exp(-params.beta * params.spec.phi_min * k);

    const int n = params.n;
    const RngEngine chain_rng0 = rng;  // a widened retry re-bins the identical chain
    for (int attempt = 0;; ++attempt) {
        rep.bins_per_axis = bins_per_axis;
        const long nbins = static_cast<long>(bins_per_axis) * bins_per_axis * bins_per_axis;
        const double bin_vol = 1.0 / static_cast<double>(nbins);
        std::vector<double> sum_f(nbins, 0.0), sum_f2(nbins, 0.0);
        std::vector<long> counts(nbins, 0);
        std::vector<double> scratch(nbins, 0.0);

        auto bin_of = [&](const Vec3& u) {
            // u in [0,1)^3 for k = 1, displacement shifted to [0,1)^3 for k = 2
            int bx = std::min(bins_per_axis - 1, static_cast<int>(u.x * bins_per_axis));
            int by = std::min(bins_per_axis - 1, static_cast<int>(u.y * bins_per_axis));
            int bz = std::min(bins_per_axis - 1, static_cast<int>(u.z * bins_per_axis));
            return (static_cast<long>(bx) * bins_per_axis + by) * bins_per_axis + bz;
        };

        RngEngine chain_rng = chain_rng0;
        const long entries_per_sample = (k == 1) ? n : static_cast<long>(n) * (n - 1);
        rep.chain = sample_positions_mcmc(
            params, cfg, samples, chain_rng, [&](long, const std::vector<Vec3>& x) {
                std::fill(scratch.begin(), scratch.end(), 0.0);
                if (k == 1) {
                    for (const auto& xi : x) scratch[bin_of(xi)] += 1.0;
                } else {
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) {
                            if (i == j) continue;
                            Vec3 u = torus_displacement(x[i], x[j]);
                            scratch[bin_of(wrap_unit(u))] += 1.0;
                        }
                }
                for (long b = 0; b < nbins; ++b) {
                    if (scratch[b] == 0.0) continue;
                    double f = scratch[b] / entries_per_sample;
                    sum_f[b] += f;
                    sum_f2[b] += f * f;
                    counts[b] += static_cast<long>(scratch[b]);
                }
            });

        rep.low_count_bins = 0;
        rep.bin_density.assign(nbins, 0.0);
        rep.bin_se.assign(nbins, 0.0);
        double sup = -1.0, sup_se = 0.0;
        double min_d = std::numeric_limits<double>::infinity();
        long min_bin = 0;
        if (k == 2) {
            // Smallest-distance bin: the one containing displacements nearest 0.
            min_bin = bin_of(wrap_unit(Vec3{1e-12, 1e-12, 1e-12}));
        }
        for (long b = 0; b < nbins; ++b) {
            double mean_f = sum_f[b] / samples;
            double var_f =
                samples > 1 ? std::max(0.0, (sum_f2[b] / samples - mean_f * mean_f)) *
                                  samples / (samples - 1.0)
                            : 0.0;
            double dens = mean_f / bin_vol;
            double se = std::sqrt(var_f / samples) / bin_vol;
            rep.bin_density[b] = dens;
            rep.bin_se[b] = se;
            if (counts[b] < 20) ++rep.low_count_bins;
            if (dens > sup) {
                sup = dens;
                sup_se = se;
            }
        }
        rep.sup_density = sup;
        rep.sup_density_se = sup_se;
        if (k == 2) {
            double mean_f = sum_f[min_bin] / samples;
            min_d = mean_f / bin_vol;
            rep.min_density = min_d;
        }

        // Most bins starving means the resolution is too fine for the sample
        // budget; widen once and note it.
        if (rep.low_count_bins * 2 > nbins && bins_per_axis > 4 && attempt == 0) {
            bins_per_axis /= 2;
            rep.widened = true;
            continue;
        }
        rng = chain_rng;
        break;
    }

    rep.status = (rep.sup_density <= rep.bound + 3.0 * rep.sup_density_se) ? CheckStatus::pass
                                                                           : CheckStatus::fail;
    return rep;
}

}  // namespace torstab
