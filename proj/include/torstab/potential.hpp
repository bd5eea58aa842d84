#pragma once

// Periodized repulsive pair potential on the unit 3-torus.
//
// The radial profile is f(r) = C * r^(1-alpha) * T(r), where T is a C^2 taper
// equal to 1 up to half the taper radius and falling smoothly to 0 at the
// taper radius. The periodic potential sums f over image shells and subtracts
// a constant so that the cell average is zero:
//
//   phi(x) = sum_{images n} f(|x + n|) - mean_shift.
//
// With the taper ending at radius <= 1/2 the image sum is exactly periodic
// and C^2 away from the lattice points.

#include <stdexcept>
#include <string>

#include "torstab/vec3.hpp"

namespace torstab {

struct singularity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PotentialSpec {
    double alpha = 1.5;       // singularity exponent, in (0, 2)
    double amplitude = 1.0;   // C >= 0
    int image_shells = 1;     // 0 = the given displacement only
    double taper_radius = 0.5;  // end of the taper support; 0 disables the taper
    double mean_shift = 0.0;  // constant subtracted so the cell average of phi is 0
    double phi_min = 0.0;     // certified numerical lower bound for phi

    bool tapered() const { return taper_radius > 0.0; }
    double taper_onset() const { return 0.5 * taper_radius; }
};

// Validates parameters, calibrates mean_shift and phi_min.
PotentialSpec make_potential(double alpha, double amplitude, int image_shells = 1,
                             double taper_radius = 0.5);

// Radial profile f(r) and its derivative (taper included, no mean shift).
double radial_potential(const PotentialSpec& spec, double r);
double radial_potential_deriv(const PotentialSpec& spec, double r);

// phi(x) for a displacement vector x (already reduced by the caller when the
// minimal-image convention is intended). Throws singularity_error at |x| = 0
// when alpha > 1.
double potential_value(const PotentialSpec& spec, const Vec3& x);

// K(x) = -grad phi(x). Throws singularity_error at |x| = 0.
Vec3 pair_force(const PotentialSpec& spec, const Vec3& x);

// Cell average of the image sum (the value mean_shift must take).
double calibrate_mean_shift(const PotentialSpec& spec);

struct PhiMinReport {
    double phi_min = 0.0;   // grid_min - margin
    double grid_min = 0.0;
    double margin = 0.0;
    Vec3 argmin;
    int grid_per_axis = 0;  // effective full-cube resolution
};

// Grid minimization of phi over the torus (>= 128^3 effective resolution via
// the coordinate-reflection symmetry) minus a Lipschitz safety margin.
PhiMinReport estimate_phi_min(const PotentialSpec& spec, int effective_grid = 128);

// Stores the estimate into spec.phi_min and returns the report.
PhiMinReport estimate_phi_min(PotentialSpec& spec, int effective_grid);

struct DerivativeBoundReport {
    double c0 = 0.0;  // smallest constant with phi <= c0 / r^(alpha-1)
    double c1 = 0.0;  // |grad phi| <= c1 / r^alpha
    double c2 = 0.0;  // |hess phi| <= c2 / r^(alpha+1), Frobenius norm by finite differences
    bool finite = true;
    double r_min = 0.0, r_max = 0.0;
    int radii = 0, directions = 0;
};

// Sweeps |x| over a log grid in (1e-4, 1/2] (several directions) and reports
// the smallest power-law envelope constants.
DerivativeBoundReport certify_derivative_bounds(const PotentialSpec& spec, int radii = 64);

}  // namespace torstab
