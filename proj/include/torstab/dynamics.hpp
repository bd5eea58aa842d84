#pragma once

// Mean-field N-particle Hamiltonian dynamics on the torus:
//   dX_i/dt = V_i,   dV_i/dt = (1/N) sum_{j != i} K(X_i - X_j),
// integrated by velocity Verlet with close-encounter and drift monitoring.

#include <functional>
#include <string>
#include <vector>

#include "torstab/potential.hpp"
#include "torstab/vec3.hpp"

namespace torstab {

struct PhaseState {
    std::vector<Vec3> x;  // positions, kept in [0,1)^3
    std::vector<Vec3> v;

    int n() const { return static_cast<int>(x.size()); }
};

enum class ForceMethod { direct, cell_list };

struct IntegratorConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    int observations = 20;                  // observation times k * t_end / observations
    double min_pair_distance_floor = 1e-4;  // run flagged if any pair gets closer
    double energy_drift_tolerance = 1e-3;   // relative, checked at observation times
    int max_halvings = 3;                   // dt halvings retried on drift violation
    ForceMethod force_method = ForceMethod::direct;
};

struct EnergyReport {
    double kinetic = 0.0;
    double potential = 0.0;
    double total = 0.0;
    double relative_drift = 0.0;  // |H(t) - H(0)| / max(|H(0)|, 1e-300)
};

EnergyReport total_energy(const PhaseState& state, const PotentialSpec& spec);

// F_i = (1/N) sum_{j != i} K(X_i - X_j); returns the minimum pair distance
// seen during assembly (over interacting pairs for the cell-list method).
double force_all(const PhaseState& state, const PotentialSpec& spec, std::vector<Vec3>& forces,
                 ForceMethod method = ForceMethod::direct);

// One velocity-Verlet step; positions wrapped back to the torus.
void step(PhaseState& state, const PotentialSpec& spec, double dt,
          ForceMethod method = ForceMethod::direct);

enum class RejectReason { none, distance_floor, energy_drift, non_finite };

std::string to_string(RejectReason r);

struct PairRunResult {
    RejectReason reject = RejectReason::none;
    EnergyReport energy_a, energy_b;  // at the final time of the last attempt
    double min_pair_distance = 0.0;   // over both trajectories, whole run
    int halvings = 0;
    double dt_used = 0.0;
};

// Called at every observation time with both states; k = 0 is the initial
// condition. After a dt-halving restart the observer is re-invoked from k = 0
// (overwrite semantics).
using PairObserver = std::function<void(int k, double t, const PhaseState& a, const PhaseState& b)>;

// Evolves two states with an identical step schedule. On an energy-drift
// violation the whole pair is restarted with dt/2, at most max_halvings times;
// a distance-floor hit rejects the sample outright.
PairRunResult evolve_pair(PhaseState a, PhaseState b, const PotentialSpec& spec,
                          const IntegratorConfig& cfg, const PairObserver& observe);

}  // namespace torstab
