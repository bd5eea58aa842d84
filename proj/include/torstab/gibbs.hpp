#pragma once

// Gibbs equilibrium mu_N = e^{-beta H_N} / B_N: exact Gaussian velocity
// sampling, single-particle Metropolis for the position marginal
// nu_N ~ e^{-beta E_pot}, and numerical checks of the partition-function and
// marginal bounds.

#include <functional>
#include <vector>

#include "torstab/dynamics.hpp"
#include "torstab/potential.hpp"
#include "torstab/rng.hpp"

namespace torstab {

struct GibbsParams {
    double beta = 1.0;
    int n = 2;
    PotentialSpec spec;
};

struct ChainConfig {
    long burn_in_sweeps = 10000;   // sweeps of N single-particle moves
    long thin_sweeps = 1;          // sweeps between kept samples
    double proposal_step = 0.0;    // Gaussian proposal scale; 0 = auto-tune
    double target_acceptance = 0.3;
    double singular_floor = 1e-6;  // proposals closer than this are auto-rejected
};

struct ChainDiagnostics {
    double acceptance_rate = 0.0;  // production phase
    long burn_in_moves = 0;
    long thin_moves = 0;
    double proposal_step = 0.0;    // after tuning
    std::vector<double> window_mean_epot;
    std::vector<double> window_se_epot;
    bool stationary = true;
};

// i.i.d. centered Gaussians with per-component variance 1/beta.
std::vector<Vec3> sample_velocities(const GibbsParams& params, RngEngine& rng);

// Runs one Metropolis chain and hands each kept position configuration to
// on_sample. Position-only; never touches velocities.
ChainDiagnostics sample_positions_mcmc(
    const GibbsParams& params, const ChainConfig& cfg, long keep, RngEngine& rng,
    const std::function<void(long, const std::vector<Vec3>&)>& on_sample);

// Convenience single draw.
std::vector<Vec3> sample_positions_mcmc(const GibbsParams& params, const ChainConfig& cfg,
                                        RngEngine& rng, ChainDiagnostics* diag = nullptr);

// MCMC positions + fresh Gaussian velocities (mu_N factorizes).
PhaseState sample_gibbs(const GibbsParams& params, const ChainConfig& cfg, RngEngine& pos_rng,
                        RngEngine& vel_rng, ChainDiagnostics* diag = nullptr);

enum class CheckStatus { pass, fail, inconclusive };

std::string to_string(CheckStatus s);

// Partition-function bounds at N = 2, where B_2 = (2*pi/beta)^3 * B_{2,X}
// with B_{2,X} = int_T3 exp(-beta*phi(r)/2) dr by translation invariance.
struct PartitionBoundReport {
    double b2x = 0.0;          // configurational integral, quadrature value
    double quad_error = 0.0;   // Richardson error estimate
    double lower_margin = 0.0;  // b2x - 1
    double upper_margin = 0.0;  // e^{-beta*phi_min} - b2x
    double b2 = 0.0;           // (2*pi/beta)^3 * b2x
    double lower_bound = 0.0;  // (2*pi/beta)^3
    double upper_bound = 0.0;  // (2*pi*e^{-beta*phi_min/3}/beta)^3
    bool quad_converged = false;
    CheckStatus status = CheckStatus::inconclusive;
};

PartitionBoundReport verify_partition_bounds(const GibbsParams& params, int quad_base_n = 32);

// Histogram check of nu^k <= c_beta^k, c_beta = e^{-beta*phi_min}.
// k = 1: single-particle positions; k = 2: pair displacement, which fixes
// nu^2 by translation invariance.
struct MarginalBoundReport {
    int k = 1;
    double bound = 1.0;          // c_beta^k
    double sup_density = 0.0;
    double sup_density_se = 0.0;  // standard error of the bin attaining the sup
    double min_density = 0.0;     // smallest-distance bin for k = 2
    long samples = 0;
    int bins_per_axis = 0;
    long low_count_bins = 0;      // bins with < 20 entries (se unreliable there)
    bool widened = false;
    std::vector<double> bin_density;  // flattened (x*b + y)*b + z
    std::vector<double> bin_se;
    ChainDiagnostics chain;
    CheckStatus status = CheckStatus::inconclusive;
};

MarginalBoundReport verify_marginal_bounds(const GibbsParams& params, int k, long samples,
                                           const ChainConfig& cfg, RngEngine& rng,
                                           int bins_per_axis = 16);

}  // namespace torstab
