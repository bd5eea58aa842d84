#include <cmath>

#include "doctest.h"
#include "torstab/geometry.hpp"
#include "torstab/gibbs.hpp"
#include "torstab/quadrature.hpp"

using namespace torstab;

namespace {

PotentialSpec free_spec() {
    PotentialSpec s;
    s.amplitude = 0.0;
    s.mean_shift = 0.0;
    return s;
}

}  // namespace

TEST_CASE("velocity marginals are Gaussian with variance 1/beta") {
    auto spec = free_spec();
    RngEngine rng(404);
    const int m = 100000;

    SUBCASE("variance at beta = 1") {
        GibbsParams p{1.0, 1, spec};
        double s2 = 0.0, mean = 0.0;
        for (int i = 0; i < m; ++i) {
            auto v = sample_velocities(p, rng);
            mean += v[0].x;
            s2 += v[0].x * v[0].x;
        }
        mean /= m;
        s2 = s2 / m - mean * mean;
        CHECK(std::abs(s2 - 1.0) < 0.02);
        CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(m)));
    }
    SUBCASE("variance ratio between beta = 1 and beta = 4") {
        GibbsParams p1{1.0, 1, spec}, p4{4.0, 1, spec};
        double a = 0.0, b = 0.0;
        for (int i = 0; i < m / 4; ++i) {
            a += norm_sq(sample_velocities(p1, rng)[0]);
            b += norm_sq(sample_velocities(p4, rng)[0]);
        }
        CHECK(std::abs(a / b - 4.0) < 0.2);
    }
}

TEST_CASE("free chain is uniform on the torus") {
    GibbsParams p{1.0, 4, free_spec()};
    ChainConfig cfg;
    cfg.burn_in_sweeps = 200;
    RngEngine rng(11);
    auto rep = verify_marginal_bounds(p, 1, 4000, cfg, rng, 4);
    CHECK(rep.status == CheckStatus::pass);
    CHECK(rep.bound == doctest::Approx(1.0));
    // flat histogram: the densest bin stays within noise of 1
    CHECK(rep.sup_density < 1.0 + 5.0 * rep.sup_density_se + 0.1);
}

TEST_CASE("two-particle separation matches the quadrature density") {
    auto spec = make_potential(1.5, 1.0, 1, 0.5);
    GibbsParams p{1.0, 2, spec};
    ChainConfig cfg;
    cfg.burn_in_sweeps = 2000;
    cfg.thin_sweeps = 10;

    const int nbins = 9;
    const double lo = 0.05, hi = 0.5;
    const double w = (hi - lo) / nbins;
    std::vector<long> counts(nbins, 0);
    long m = 20000;
    RngEngine rng(2024);
    sample_positions_mcmc(p, cfg, m, rng, [&](long, const std::vector<Vec3>& x) {
        double r = torus_distance(x[0], x[1]);
        if (r >= lo && r < hi) counts[static_cast<int>((r - lo) / w)] += 1;
    });

    // Oracle: P(bin) = int_bin 4 pi r^2 e^{-beta phi(r)/2} dr / B_{2,X}.
    double b2x = integrate_torus_richardson(
                     [&](double x, double y, double z) {
                         return std::exp(-0.5 * p.beta * potential_value(spec, {x, y, z}));
                     },
                     16)
                     .value;
    auto dens = [&](double r) {
        return 4.0 * M_PI * r * r * std::exp(-0.5 * p.beta * potential_value(spec, {r, 0, 0}));
    };
    for (int b = 0; b < nbins; ++b) {
        double prob = integrate_adaptive(dens, lo + b * w, lo + (b + 1) * w, 1e-10) / b2x;
        double f = static_cast<double>(counts[b]) / m;
        double se = std::sqrt(prob * (1.0 - prob) / m);
        CHECK(std::abs(f - prob) < 3.0 * se + 0.004);  // small slack for chain correlation
    }
}

TEST_CASE("proposal auto-tuning lands in the target window") {
    // strongly coupled point: the landscape is rough enough for the target
    // acceptance to be reachable
    auto spec = make_potential(1.5, 4.0, 1, 0.5);
    GibbsParams p{2.0, 8, spec};
    ChainConfig cfg;  // proposal_step = 0: tune toward 0.3
    cfg.burn_in_sweeps = 3000;
    RngEngine rng(5150);
    ChainDiagnostics diag = sample_positions_mcmc(
        p, cfg, 250, rng, [](long, const std::vector<Vec3>&) {});
    CHECK(diag.acceptance_rate >= 0.2);
    CHECK(diag.acceptance_rate <= 0.45);
    CHECK(diag.proposal_step > 0.0);
}

TEST_CASE("gibbs samples factorize position and velocity") {
    auto spec = make_potential(1.5, 1.0, 1, 0.5);
    GibbsParams p{1.0, 16, spec};
    ChainConfig cfg;
    cfg.burn_in_sweeps = 300;
    const int m = 1000;
    double ek_sum = 0.0, ek2 = 0.0, ep_sum = 0.0, ep2 = 0.0, cross = 0.0;
    for (int s = 0; s < m; ++s) {
        RngEngine pos = make_engine(31337, s, "positions");
        RngEngine vel = make_engine(31337, s, "velocities");
        PhaseState z = sample_gibbs(p, cfg, pos, vel);
        auto e = total_energy(z, spec);
        ek_sum += e.kinetic;
        ek2 += e.kinetic * e.kinetic;
        ep_sum += e.potential;
        ep2 += e.potential * e.potential;
        cross += e.kinetic * e.potential;
    }
    double ek_mean = ek_sum / m, ep_mean = ep_sum / m;
    double ek_var = ek2 / m - ek_mean * ek_mean;
    double ep_var = ep2 / m - ep_mean * ep_mean;

    // equipartition: E[E_kin] = 3N/(2 beta)
    double want = 1.5 * p.n / p.beta;
    double se = std::sqrt(ek_var / m);
    CHECK(std::abs(ek_mean - want) < 3.0 * se);

    // independence: corr(E_kin, E_pot) = 0 within 3 sigma (~1/sqrt(m))
    double corr = (cross / m - ek_mean * ep_mean) / std::sqrt(ek_var * ep_var);
    CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("two independent chains agree on the potential energy") {
    auto spec = make_potential(1.5, 1.0, 1, 0.5);
    GibbsParams p{1.0, 16, spec};
    ChainConfig cfg;
    cfg.burn_in_sweeps = 1500;
    cfg.thin_sweeps = 2;
    auto run_chain = [&](std::uint64_t seed) {
        RngEngine rng = make_engine(seed, 0, "positions");
        double sum = 0.0, sum2 = 0.0;
        const long m = 400;
        PhaseState z;
        z.v.assign(p.n, Vec3{});
        sample_positions_mcmc(p, cfg, m, rng, [&](long, const std::vector<Vec3>& x) {
            z.x = x;
            double e = total_energy(z, spec).potential;
            sum += e;
            sum2 += e * e;
        });
        double mean = sum / m;
        return std::pair{mean, std::sqrt((sum2 / m - mean * mean) / (m - 1))};
    };
    auto [m1, se1] = run_chain(111);
    auto [m2, se2] = run_chain(222);
    CHECK(std::isfinite(m1));
    CHECK(std::abs(m1 - m2) < 3.0 * std::hypot(se1, se2) + 1e-9);
}

TEST_CASE("partition-function bounds at N = 2") {
    SUBCASE("free case saturates the lower bound") {
        GibbsParams p{1.0, 2, free_spec()};
        auto rep = verify_partition_bounds(p, 16);
        CHECK(rep.status == CheckStatus::pass);
        CHECK(std::abs(rep.b2x - 1.0) < 1e-8);
        CHECK(rep.b2 == doctest::Approx(std::pow(2.0 * M_PI, 3.0)).epsilon(1e-10));
    }
    SUBCASE("lower bound equals one at beta = 2 pi") {
        GibbsParams p{2.0 * M_PI, 2, free_spec()};
        auto rep = verify_partition_bounds(p, 16);
        CHECK(rep.lower_bound == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rep.status == CheckStatus::pass);
    }
    SUBCASE("interacting case holds with a strict Jensen margin") {
        auto spec = make_potential(1.5, 1.0, 1, 0.5);
        GibbsParams p{1.0, 2, spec};
        auto rep = verify_partition_bounds(p, 24);
        CHECK(rep.status == CheckStatus::pass);
        CHECK(rep.lower_margin > 10.0 * rep.quad_error);  // strictly above, zero-mean phi
        CHECK(rep.upper_margin > 0.0);
        CHECK(rep.quad_converged);
    }
    SUBCASE("requires n = 2") {
        GibbsParams p{1.0, 3, free_spec()};
        CHECK_THROWS_AS(verify_partition_bounds(p, 16), std::invalid_argument);
    }
}

TEST_CASE("marginal bounds hold at N = 16") {
    auto spec = make_potential(1.5, 1.0, 1, 0.5);
    GibbsParams p{1.0, 16, spec};
    ChainConfig cfg;
    cfg.burn_in_sweeps = 1000;
    SUBCASE("one-particle marginal") {
        RngEngine rng(909);
        auto rep = verify_marginal_bounds(p, 1, 8000, cfg, rng, 8);
        CHECK(rep.status == CheckStatus::pass);
        CHECK(rep.bound > 1.0);  // phi_min < 0 after mean subtraction
    }
    SUBCASE("pair marginal vanishes near contact") {
        GibbsParams p2{2.0, 16, spec};
        RngEngine rng(910);
        auto rep = verify_marginal_bounds(p2, 2, 8000, cfg, rng, 16);
        CHECK(rep.status == CheckStatus::pass);
        CHECK(rep.min_density < 0.1 * rep.bound);
    }
    SUBCASE("only k = 1, 2 are supported") {
        RngEngine rng(911);
        CHECK_THROWS_AS(verify_marginal_bounds(p, 3, 100, cfg, rng, 4), std::invalid_argument);
    }
}
