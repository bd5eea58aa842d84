#pragma once

// Phase-space distance, the Q(t) log-divergence Monte Carlo estimator,
// neighbor sets, near/far force-difference diagnostics and growth fitting.

#include <cstdint>
#include <string>
#include <vector>

#include "torstab/dynamics.hpp"
#include "torstab/gibbs.hpp"
#include "torstab/shifts.hpp"

namespace torstab {

// (1/2N) sum_i ( d_T(X_i, X_i') + |V_i - V_i'| ), geodesic torus distance on
// positions.
double norm1(const PhaseState& a, const PhaseState& b);

struct TheoremParams {
    double epsilon = 0.0;    // delta_N = N^-epsilon; 0 = default min(1 - alpha/3, 1/2)
    double a_exponent = 0.0;  // > 2 alpha / 3; 0 = default 2 alpha/3 + 0.1
    int neighbor_l = 0;       // 0 = default ceil(36 / (2 - alpha)), capped at floor(sqrt N)
};

struct ResolvedTheoremParams {
    double epsilon = 0.0;
    double delta_n = 0.0;
    double a_exponent = 0.0;
    int neighbor_l = 0;
    bool l_capped = false;
    bool epsilon_out_of_range = false;  // epsilon > 1 - alpha/3 (warning, not error)
    bool below_theorem_regime = false;  // N < 6^4 / (2 - alpha)^2
    double c_beta = 0.0;                // e^{-beta phi_min} (marginal-bound form)
    double c_beta_a = 0.0;              // c_beta^a
    double c_beta_half = 0.0;           // e^{-beta phi_min / 2} (growth-bound form)
};

ResolvedTheoremParams resolve_theorem_params(const TheoremParams& tp, double alpha, double beta,
                                             double phi_min, int n);

// Per particle, the indices of the L nearest others by torus distance;
// ties break toward the smaller index.
std::vector<std::vector<int>> neighbor_sets(const PhaseState& state, int l);

struct ProofTermSample {
    double s1 = 0.0;          // (1/(delta_N N^2)) sum_i sum_{j in C_i u C_i^d} |K(X_i - X_j)|
    double s1_delta = 0.0;    // same with the shifted configuration
    double s2_majorant = 0.0;  // max_i (1/N) sum_{j not in C_i u C_i^d} (r_ij^-(a+1) + r'_ij^-(a+1))
};

ProofTermSample proof_term_sample(const PhaseState& a, const PhaseState& b,
                                  const PotentialSpec& spec, int l, double delta_n);

// Fraction of indices whose nearest particle of the shifted configuration in
// the |dX| + |dV| phase-space distance is the same index.
double pairing_overlap(const PhaseState& a, const PhaseState& b);

struct QCurve {
    std::vector<double> times;
    std::vector<double> q;
    std::vector<double> q_stderr;
    std::vector<int> m_effective;
    int samples_requested = 0;
    int samples_rejected = 0;
    double delta_n = 0.0;
    double epsilon = 0.0;
};

struct ProofTermReport {
    std::vector<double> times;
    std::vector<double> s1, s1_stderr;
    std::vector<double> s1_delta, s1_delta_stderr;
    std::vector<double> s2_majorant, s2_majorant_stderr;
    int neighbor_l = 0;
    bool l_capped = false;
};

struct RejectionStats {
    int distance_floor = 0;
    int energy_drift = 0;
    int non_finite = 0;
    int shift_infeasible = 0;
    int total() const { return distance_floor + energy_drift + non_finite + shift_infeasible; }
    std::vector<int> halvings_histogram = std::vector<int>(4, 0);  // accepted samples by halvings
};

struct McConfig {
    int samples = 100;
    std::uint64_t seed = 1;
    int workers = 0;  // 0 = hardware concurrency
};

struct QOptions {
    bool proof_terms = true;
    bool overlap = true;
    double preroll_tau = 0.0;  // evolve both trajectories from -tau to 0 first
    // When set, receives sample 0's pair trajectory (k, t, base, shifted).
    PairObserver dump_observer;
};

struct QEstimate {
    QCurve curve;
    ProofTermReport proof;
    std::vector<double> overlap_mean;
    std::vector<double> overlap_stderr;
    // Path-wise velocity-difference contribution to dQ/dt; <= 1 always.
    double max_velocity_term = 0.0;
    RejectionStats rejections;
    ResolvedTheoremParams theorem;
    // Time-shift recipe bookkeeping: mean split of the t = 0 shift.
    double shift_position_share = 0.0;
    double shift_norm1_mean = 0.0;
    std::vector<std::string> warnings;
};

// Monte Carlo over (Z0, delta): M pairs evolved with identical schedules,
// Q(t) = mean of ln(1 + ||Z - Z^delta||_1 / delta_N). Sample i uses streams
// derived from (seed, i, purpose); results do not depend on the worker count.
QEstimate estimate_q(const GibbsParams& params, const ChainConfig& chain, const ShiftSpec& shift,
                     const TheoremParams& theorem, const IntegratorConfig& integrator,
                     const McConfig& mc, const QOptions& options = {});

struct GrowthFit {
    double slope = 0.0;
    double slope_stderr = 0.0;
    double intercept = 0.0;
    double intercept_stderr = 0.0;
    // Least-squares line diagnostics.
    double max_positive_residual = 0.0;
    int positive_residuals = 0;
    int negative_residuals = 0;
    // Tightest affine envelope through (t0, Q(0)): slope = max chord.
    double envelope_slope = 0.0;
    double envelope_max_positive_residual = 0.0;
    int points = 0;
};

// Inverse-variance weighted affine fit plus the anchored upper envelope.
GrowthFit fit_linear_growth(const QCurve& curve);

}  // namespace torstab
