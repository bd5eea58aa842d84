#pragma once

// Run configuration: a flat section/key-value text format (see
// docs/config_format.md), validated at parse time with file/line context.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "torstab/dynamics.hpp"
#include "torstab/gibbs.hpp"
#include "torstab/shifts.hpp"
#include "torstab/stability.hpp"

namespace torstab {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // potential
    double alpha = 1.5;
    double amplitude = 1.0;
    int image_shells = 1;
    double taper_radius = 0.5;
    // gibbs
    double beta = 1.0;
    int n = 16;
    ChainConfig chain;
    // shift
    ShiftSpec shift = GaussianVelocityShift{1.0};
    bool energy_sphere_auto_rmax = false;  // r_max = sqrt(N) * delta_N
    // theorem
    TheoremParams theorem;
    // integrator
    IntegratorConfig integrator;
    // monte_carlo
    McConfig mc;
    // checks
    long marginal_samples = 100000;
    int marginal_bins = 16;
    int quad_base_n = 32;
    long condition_samples = 1000;
    // recipe
    double tau = 0.0;
    // output
    std::string out_dir = "out";
    bool dump_trajectories = false;
    bool emit_svg = true;

    // sweep lists (single values elsewhere); empty = use the scalar field
    std::vector<int> sweep_n;
    std::vector<double> sweep_alpha, sweep_beta, sweep_epsilon, sweep_sigma;

    GibbsParams gibbs_params() const;      // builds the calibrated potential
    ShiftSpec resolved_shift(int n_eff) const;
};

// Parses and validates; every violated constraint reports file:line.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");

// Canonical serialization of the effective configuration (scalar fields).
std::string canonical_config(const RunConfig& cfg);

// FNV-1a 64 digest of the canonical serialization, as 16 hex digits.
std::string config_digest(const RunConfig& cfg);

}  // namespace torstab
