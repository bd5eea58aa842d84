#include <cmath>

#include "doctest.h"
#include "torstab/potential.hpp"
#include "torstab/quadrature.hpp"
#include "torstab/rng.hpp"

using namespace torstab;

namespace {

PotentialSpec raw_power_law(double alpha, double amplitude = 1.0) {
    PotentialSpec s;
    s.alpha = alpha;
    s.amplitude = amplitude;
    s.image_shells = 0;
    s.taper_radius = 0.0;  // taper disabled
    s.mean_shift = 0.0;
    return s;
}

// Central finite difference of the potential.
Vec3 force_fd(const PotentialSpec& spec, const Vec3& x, double h) {
    Vec3 g;
    g.x = (potential_value(spec, {x.x + h, x.y, x.z}) - potential_value(spec, {x.x - h, x.y, x.z})) / (2 * h);
    g.y = (potential_value(spec, {x.x, x.y + h, x.z}) - potential_value(spec, {x.x, x.y - h, x.z})) / (2 * h);
    g.z = (potential_value(spec, {x.x, x.y, x.z + h}) - potential_value(spec, {x.x, x.y, x.z - h})) / (2 * h);
    return -g;
}

}  // namespace

TEST_CASE("pure power law value") {
    auto s = raw_power_law(1.5);
    CHECK(potential_value(s, {0.25, 0.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("calibrated mean is zero on a 64^3 grid") {
    auto s = make_potential(1.5, 1.0, 1, 0.5);
    double mean = integrate_torus_even(
        [&](double x, double y, double z) { return potential_value(s, {x, y, z}); }, 64);
    CHECK(std::abs(mean) < 1e-6);
}

TEST_CASE("bounded case stays finite toward zero separation") {
    auto s = raw_power_law(0.5);
    double prev = potential_value(s, {1e-2, 0, 0});
    for (double r : {1e-4, 1e-6, 1e-8}) {
        double v = potential_value(s, {r, 0, 0});
        CHECK(std::isfinite(v));
        CHECK(v < prev);  // C * r^{1/2} shrinks
        prev = v;
    }
    CHECK(potential_value(s, {0, 0, 0}) == 0.0);
}

TEST_CASE("singularity raises for alpha > 1") {
    auto s = raw_power_law(1.5);
    CHECK_THROWS_AS(potential_value(s, {0, 0, 0}), singularity_error);
    CHECK_THROWS_AS(pair_force(s, {0, 0, 0}), singularity_error);
}

TEST_CASE("force matches the finite-difference oracle on a raw power law") {
    auto s = raw_power_law(1.5);
    Vec3 x{0.3, 0.0, 0.0};
    Vec3 k = pair_force(s, x);
    Vec3 fd = force_fd(s, x, 1e-5);
    CHECK(norm(k - fd) / norm(k) < 1e-6);
}

TEST_CASE("force is odd, potential is even, pushes apart for alpha > 1") {
    auto s = make_potential(1.5, 1.0, 1, 0.5);
    RngEngine rng(99);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    for (int t = 0; t < 200; ++t) {
        Vec3 x{uni(rng), uni(rng), uni(rng)};
        if (norm(x) < 1e-3) continue;
        Vec3 kp = pair_force(s, x);
        Vec3 km = pair_force(s, -x);
        CHECK(kp.x == doctest::Approx(-km.x).epsilon(1e-12));
        CHECK(kp.y == doctest::Approx(-km.y).epsilon(1e-12));
        CHECK(kp.z == doctest::Approx(-km.z).epsilon(1e-12));
        CHECK(potential_value(s, x) == doctest::Approx(potential_value(s, -x)).epsilon(1e-12));
    }
    for (double r : {0.05, 0.1, 0.2}) {
        CHECK(r < s.taper_onset());
        CHECK(pair_force(s, {r, 0, 0}).x > 0.0);
    }
}

TEST_CASE("force-difference accuracy across the taper seam") {
    auto s = make_potential(1.5, 1.0, 1, 0.5);
    RngEngine rng(3);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    int seam = 0, off = 0;
    for (int t = 0; t < 400; ++t) {
        Vec3 x{uni(rng), uni(rng), uni(rng)};
        double r = norm(x);
        if (r < 0.02 || r > 0.49) continue;
        Vec3 k = pair_force(s, x);
        if (norm(k) < 1e-10) continue;  // beyond every image's taper
        Vec3 fd = force_fd(s, x, 1e-6);
        double rel = norm(k - fd) / norm(k);
        bool on_seam = r > s.taper_onset() - 0.01 && r < s.taper_radius + 0.01;
        if (on_seam) {
            CHECK(rel < 1e-3);
            ++seam;
        } else {
            CHECK(rel < 1e-5);
            ++off;
        }
    }
    CHECK(seam > 10);
    CHECK(off > 10);
}

TEST_CASE("derivative bound certificates") {
    SUBCASE("free case: all constants zero") {
        PotentialSpec s;
        s.amplitude = 0.0;
        s.mean_shift = 0.0;
        auto rep = certify_derivative_bounds(s);
        CHECK(rep.c0 == 0.0);
        CHECK(rep.c1 == 0.0);
        CHECK(rep.c2 == 0.0);
        CHECK(rep.finite);
    }
    SUBCASE("raw power law recovers its own amplitude") {
        auto s = raw_power_law(1.5, 2.0);
        auto rep = certify_derivative_bounds(s);
        CHECK(rep.finite);
        // phi * r^{alpha-1} = C exactly for the untapered single image
        CHECK(rep.c0 == doctest::Approx(2.0).epsilon(1e-10));
        // |grad phi| * r^alpha = C |1-alpha| = C/2
        CHECK(rep.c1 == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(rep.c2 > 0.0);
    }
    SUBCASE("steep exponent still certifies finite constants") {
        auto s = make_potential(1.9, 1.0, 1, 0.5);
        auto rep = certify_derivative_bounds(s);
        CHECK(rep.finite);
        CHECK(rep.c0 > 0.0);
        CHECK(rep.c1 > 0.0);
        CHECK(rep.c2 > 0.0);
    }
}

TEST_CASE("phi_min estimation") {
    SUBCASE("free case") {
        PotentialSpec s;
        s.amplitude = 0.0;
        s.mean_shift = 0.0;
        auto rep = estimate_phi_min(s, 128);
        CHECK(rep.phi_min == 0.0);
        CHECK(rep.margin == 0.0);
    }
    SUBCASE("pure repulsive law: the far corner minimizes") {
        auto s = raw_power_law(1.5);
        auto rep = estimate_phi_min(s, 128);
        double corner = std::pow(std::sqrt(3.0) / 2.0, -0.5);
        CHECK(rep.grid_min == doctest::Approx(corner).epsilon(1e-12));
        CHECK(rep.phi_min <= corner);
        CHECK(rep.phi_min >= corner - 2.0 * rep.margin - 1e-12);
    }
    SUBCASE("mean subtraction forces a negative minimum") {
        auto s = make_potential(1.5, 1.0, 1, 0.5);
        CHECK(s.phi_min < 0.0);
        auto rep = estimate_phi_min(s, 128);
        // taper kills f beyond its radius, so the floor is exactly -mean_shift
        CHECK(rep.grid_min == doctest::Approx(-s.mean_shift).epsilon(1e-12));
    }
}

TEST_CASE("construction rejects out-of-range exponents") {
    CHECK_THROWS_AS(make_potential(2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_potential(2.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_potential(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_potential(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_potential(1.5, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_potential(1.5, 1.0, 1, 0.7), std::invalid_argument);
}

TEST_CASE("nearest-image-only and one-shell sums agree under a compact taper") {
    auto s1 = make_potential(1.5, 1.0, 1, 0.5);
    PotentialSpec s0 = s1;
    s0.image_shells = 0;
    RngEngine rng(21);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    for (int t = 0; t < 200; ++t) {
        Vec3 x{uni(rng), uni(rng), uni(rng)};
        if (norm(x) < 1e-6) continue;
        CHECK(potential_value(s1, x) == doctest::Approx(potential_value(s0, x)).epsilon(1e-14));
    }
}
