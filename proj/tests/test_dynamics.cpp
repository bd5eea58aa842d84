#include <cmath>

#include "doctest.h"
#include "torstab/dynamics.hpp"
#include "torstab/geometry.hpp"
#include "torstab/gibbs.hpp"
#include "torstab/rng.hpp"

using namespace torstab;

namespace {

PotentialSpec raw_power_law(double alpha, double amplitude = 1.0) {
    PotentialSpec s;
    s.alpha = alpha;
    s.amplitude = amplitude;
    s.image_shells = 0;
    s.taper_radius = 0.0;
    s.mean_shift = 0.0;
    return s;
}

PotentialSpec free_spec() {
    PotentialSpec s;
    s.amplitude = 0.0;
    s.mean_shift = 0.0;
    return s;
}

PhaseState random_state(int n, std::uint64_t seed, double vscale = 1.0) {
    RngEngine rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, vscale);
    PhaseState z;
    z.x.resize(n);
    z.v.resize(n);
    for (auto& x : z.x) x = {uni(rng), uni(rng), uni(rng)};
    for (auto& v : z.v) v = {gauss(rng), gauss(rng), gauss(rng)};
    return z;
}

Vec3 sum_velocity(const PhaseState& z) {
    Vec3 s{};
    for (const auto& v : z.v) s += v;
    return s;
}

}  // namespace

TEST_CASE("kinetic energy of two unit-speed particles") {
    PhaseState z;
    z.x = {{0.1, 0.1, 0.1}, {0.6, 0.1, 0.1}};
    z.v = {{1, 0, 0}, {1, 0, 0}};
    auto e = total_energy(z, free_spec());
    CHECK(e.kinetic == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.potential == 0.0);
    CHECK(e.total == e.kinetic + e.potential);
}

TEST_CASE("pair potential energy carries the mean-field 1/2N factor") {
    PhaseState z;
    z.x = {{0.1, 0.2, 0.3}, {0.6, 0.2, 0.3}};  // separation 0.5
    z.v = {{0, 0, 0}, {0, 0, 0}};
    auto e = total_energy(z, raw_power_law(1.5));
    CHECK(e.potential == doctest::Approx(std::pow(0.5, -0.5) / 2.0).epsilon(1e-14));
}

TEST_CASE("two-body forces are equal and opposite") {
    PhaseState z;
    z.x = {{0.15, 0.4, 0.9}, {0.55, 0.35, 0.2}};
    z.v = {{0, 0, 0}, {0, 0, 0}};
    std::vector<Vec3> f;
    force_all(z, raw_power_law(1.5), f);
    CHECK(f[0].x == -f[1].x);
    CHECK(f[0].y == -f[1].y);
    CHECK(f[0].z == -f[1].z);
}

TEST_CASE("forces equal the potential-energy gradient") {
    auto spec = make_potential(1.5, 1.0, 1, 0.5);
    PhaseState z = random_state(8, 11);
    std::vector<Vec3> f;
    force_all(z, spec, f);
    const double h = 1e-6;
    for (int i = 0; i < z.n(); ++i) {
        for (int c = 0; c < 3; ++c) {
            PhaseState zp = z, zm = z;
            double* pp = c == 0 ? &zp.x[i].x : c == 1 ? &zp.x[i].y : &zp.x[i].z;
            double* pm = c == 0 ? &zm.x[i].x : c == 1 ? &zm.x[i].y : &zm.x[i].z;
            *pp += h;
            *pm -= h;
            double grad = (total_energy(zp, spec).potential - total_energy(zm, spec).potential) /
                          (2 * h);
            double fc = c == 0 ? f[i].x : c == 1 ? f[i].y : f[i].z;
            CHECK(fc == doctest::Approx(-grad).epsilon(2e-5));
        }
    }
}

TEST_CASE("free flight is exact") {
    auto spec = free_spec();
    PhaseState z;
    z.x = {{0.125, 0.25, 0.5}, {0.75, 0.375, 0.0625}};
    z.v = {{0.25, -0.5, 1.0}, {-0.25, 0.125, 0.5}};
    PhaseState z0 = z;
    const double dt = 1.0 / 1024.0;  // dyadic: every drift add is exact
    const int steps = 512;
    for (int s = 0; s < steps; ++s) step(z, spec, dt);
    for (int i = 0; i < z.n(); ++i) {
        Vec3 want = wrap_unit(z0.x[i] + (steps * dt) * z0.v[i]);
        CHECK(z.x[i].x == want.x);
        CHECK(z.x[i].y == want.y);
        CHECK(z.x[i].z == want.z);
        CHECK(z.v[i].x == z0.v[i].x);
    }
}

TEST_CASE("forward-backward reversibility at alpha = 1") {
    auto spec = make_potential(1.0, 1.0, 1, 0.5);
    PhaseState z = random_state(16, 5, 0.7);
    PhaseState z0 = z;
    const double dt = 1e-3;
    const int steps = 500;  // T = 0.5
    for (int s = 0; s < steps; ++s) step(z, spec, dt);
    for (auto& v : z.v) v = -v;
    for (int s = 0; s < steps; ++s) step(z, spec, dt);
    for (int i = 0; i < z.n(); ++i) {
        CHECK(std::abs(min_image(z.x[i].x - z0.x[i].x)) < 1e-6);
        CHECK(std::abs(min_image(z.x[i].y - z0.x[i].y)) < 1e-6);
        CHECK(std::abs(min_image(z.x[i].z - z0.x[i].z)) < 1e-6);
    }
}

TEST_CASE("energy and momentum conservation on a short equilibrium run") {
    auto spec = make_potential(1.5, 1.0, 1, 0.5);
    GibbsParams params{1.0, 32, spec};
    ChainConfig chain;
    chain.burn_in_sweeps = 400;
    RngEngine pos = make_engine(77, 0, "positions");
    RngEngine vel = make_engine(77, 0, "velocities");
    PhaseState z = sample_gibbs(params, chain, pos, vel);

    auto e0 = total_energy(z, spec);
    Vec3 p0 = sum_velocity(z);
    const double dt = 1e-3;
    for (int s = 0; s < 200; ++s) step(z, spec, dt);
    auto e1 = total_energy(z, spec);
    Vec3 p1 = sum_velocity(z);
    CHECK(std::abs(e1.total - e0.total) / std::abs(e0.total) < 1e-4);
    CHECK(norm(p1 - p0) < 1e-10 * 0.2);  // < 1e-10 per unit time over T = 0.2
}

TEST_CASE("energy drift shrinks quadratically in dt") {
    auto spec = make_potential(1.5, 1.0, 1, 0.5);
    GibbsParams params{1.0, 16, spec};
    ChainConfig chain;
    chain.burn_in_sweeps = 400;

    auto drift_at = [&](double dt) {
        RngEngine pos = make_engine(31, 0, "positions");
        RngEngine vel = make_engine(31, 0, "velocities");
        PhaseState z = sample_gibbs(params, chain, pos, vel);
        auto e0 = total_energy(z, spec);
        int steps = static_cast<int>(std::lround(0.5 / dt));
        double worst = 0.0;
        for (int s = 0; s < steps; ++s) {
            step(z, spec, dt);
            if ((s + 1) % (steps / 10) == 0)
                worst = std::max(worst,
                                 std::abs(total_energy(z, spec).total - e0.total));
        }
        return worst;
    };
    double d1 = drift_at(2e-3);
    double d2 = drift_at(1e-3);
    CHECK(d1 / d2 > 3.5);  // ~4 for a second-order scheme
    CHECK(d1 / d2 < 4.5);
}

TEST_CASE("a tight drift tolerance triggers dt halvings") {
    auto spec = make_potential(1.5, 1.0, 1, 0.5);
    GibbsParams params{1.0, 16, spec};
    ChainConfig chain;
    chain.burn_in_sweeps = 400;
    RngEngine pos = make_engine(7, 0, "positions");
    RngEngine vel = make_engine(7, 0, "velocities");
    PhaseState a = sample_gibbs(params, chain, pos, vel);
    PhaseState b = a;
    b.v[0].x += 0.01;

    IntegratorConfig cfg;
    cfg.dt = 4e-3;
    cfg.t_end = 0.5;
    cfg.observations = 5;
    cfg.energy_drift_tolerance = 1e-5;
    auto res = evolve_pair(a, b, spec, cfg, nullptr);
    CHECK(res.reject == RejectReason::none);
    CHECK(res.halvings >= 1);
    CHECK(res.dt_used == doctest::Approx(4e-3 / std::pow(2.0, res.halvings)));
    CHECK(res.energy_a.relative_drift < 1e-5);
}

TEST_CASE("cell list reproduces direct forces exactly") {
    auto spec = make_potential(1.5, 1.0, 1, 0.2);  // 5 cells per axis
    PhaseState z = random_state(64, 17);
    std::vector<Vec3> fd, fc;
    double rd = force_all(z, spec, fd, ForceMethod::direct);
    double rc = force_all(z, spec, fc, ForceMethod::cell_list);
    for (int i = 0; i < z.n(); ++i) {
        CHECK(std::abs(fd[i].x - fc[i].x) < 1e-12 * std::max(1.0, std::abs(fd[i].x)));
        CHECK(std::abs(fd[i].y - fc[i].y) < 1e-12 * std::max(1.0, std::abs(fd[i].y)));
        CHECK(std::abs(fd[i].z - fc[i].z) < 1e-12 * std::max(1.0, std::abs(fd[i].z)));
    }
    if (rd < spec.taper_radius) CHECK(rc == doctest::Approx(rd));
}

TEST_CASE("evolve_pair on identical states reports zero distance") {
    auto spec = make_potential(1.5, 1.0, 1, 0.5);
    PhaseState z = random_state(8, 23, 0.5);
    IntegratorConfig cfg;
    cfg.t_end = 0.05;
    cfg.observations = 5;
    bool all_zero = true;
    auto res = evolve_pair(z, z, spec, cfg,
                           [&](int, double, const PhaseState& a, const PhaseState& b) {
                               for (int i = 0; i < a.n(); ++i) {
                                   if (norm_sq(a.x[i] - b.x[i]) != 0.0) all_zero = false;
                                   if (norm_sq(a.v[i] - b.v[i]) != 0.0) all_zero = false;
                               }
                           });
    CHECK(res.reject == RejectReason::none);
    CHECK(all_zero);
}

TEST_CASE("free flight with a velocity shift separates linearly") {
    auto spec = free_spec();
    PhaseState a = random_state(6, 29, 0.3);
    PhaseState b = a;
    RngEngine rng(101);
    std::normal_distribution<double> gauss(0.0, 0.05);
    std::vector<Vec3> dv(a.n());
    for (auto& d : dv) d = {gauss(rng), gauss(rng), gauss(rng)};
    for (int i = 0; i < b.n(); ++i) b.v[i] += dv[i];

    IntegratorConfig cfg;
    cfg.t_end = 1.0;
    cfg.observations = 4;
    cfg.min_pair_distance_floor = 0.0;
    auto res = evolve_pair(a, b, spec, cfg,
                           [&](int, double t, const PhaseState& za, const PhaseState& zb) {
                               double pos = 0.0, vel = 0.0;
                               for (int i = 0; i < za.n(); ++i) {
                                   pos += torus_distance(za.x[i], zb.x[i]);
                                   vel += norm(za.v[i] - zb.v[i]);
                               }
                               double want_pos = 0.0, want_vel = 0.0;
                               for (const auto& d : dv) {
                                   want_pos += norm(min_image(t * d));
                                   want_vel += norm(d);
                               }
                               CHECK(pos == doctest::Approx(want_pos).epsilon(1e-9));
                               CHECK(vel == doctest::Approx(want_vel).epsilon(1e-12));
                           });
    CHECK(res.reject == RejectReason::none);
}

TEST_CASE("the flow preserves the Gibbs measure statistically") {
    auto spec = make_potential(1.5, 1.0, 1, 0.5);
    GibbsParams params{1.0, 8, spec};
    ChainConfig chain;
    chain.burn_in_sweeps = 600;
    const int m = 60;
    double sum_d = 0.0, sum_d2 = 0.0;  // paired differences E_pot(T) - E_pot(0)
    for (int s = 0; s < m; ++s) {
        RngEngine pos = make_engine(1234, s, "positions");
        RngEngine vel = make_engine(1234, s, "velocities");
        PhaseState z = sample_gibbs(params, chain, pos, vel);
        double e0 = total_energy(z, spec).potential;
        double h0 = total_energy(z, spec).total;
        for (int t = 0; t < 500; ++t) step(z, spec, 1e-3);
        double e1 = total_energy(z, spec).potential;
        double h1 = total_energy(z, spec).total;
        CHECK(std::abs(h1 - h0) / std::abs(h0) < 1e-3);  // conserved along each path
        double d = e1 - e0;
        sum_d += d;
        sum_d2 += d * d;
    }
    double mean = sum_d / m;
    double se = std::sqrt((sum_d2 / m - mean * mean) / (m - 1));
    CHECK(std::abs(mean) <= 3.0 * se + 1e-12);
}
