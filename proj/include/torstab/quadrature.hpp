#pragma once

#include <functional>

namespace torstab {

// Adaptive Simpson on [a, b] to the given absolute tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth = 24);

// Midpoint rule over the unit torus cell [-1/2, 1/2)^3 for an integrand that is
// even in every coordinate (only the positive octant is evaluated). n is the
// number of midpoint cells per axis on the full cube; must be even.
double integrate_torus_even(const std::function<double(double, double, double)>& f, int n);

// Three midpoint levels (n, 2n, 4n) with a Richardson convergence check.
struct TorusQuadResult {
    double value = 0.0;      // finest-level estimate
    double error = 0.0;      // |I_4n - I_2n| / 3
    double ratio = 0.0;      // (I_n - I_2n) / (I_2n - I_4n), ~4 for O(h^2)
    bool converged = false;
    int finest_n = 0;
};

TorusQuadResult integrate_torus_richardson(const std::function<double(double, double, double)>& f,
                                           int base_n);

}  // namespace torstab
