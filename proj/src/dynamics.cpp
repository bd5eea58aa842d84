#include "torstab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "torstab/geometry.hpp"

namespace torstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double force_direct(const PhaseState& state, const PotentialSpec& spec,
                    std::vector<Vec3>& forces) {
    const int n = state.n();
    forces.assign(n, Vec3{});
    double min_r2 = kInf;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            Vec3 d = torus_displacement(state.x[i], state.x[j]);
            min_r2 = std::min(min_r2, norm_sq(d));
            Vec3 k = pair_force(spec, d);
            forces[i] += k;
            forces[j] -= k;  // exact action-reaction
        }
    }
    const double inv_n = 1.0 / n;
    for (auto& f : forces) f *= inv_n;
    return std::sqrt(min_r2);
}

// Cell list over the taper cutoff. Valid only when the taper truncates all
// interactions inside one cell shell; callers fall back to direct otherwise.
double force_cell_list(const PhaseState& state, const PotentialSpec& spec,
                       std::vector<Vec3>& forces) {
    const int n = state.n();
    const double cutoff = spec.taper_radius;
    const int m = static_cast<int>(std::floor(1.0 / cutoff));
    if (!spec.tapered() || m < 3) return force_direct(state, spec, forces);

    forces.assign(n, Vec3{});
    const double cell_w = 1.0 / m;
    std::vector<std::vector<int>> cells(static_cast<size_t>(m) * m * m);
    auto cell_of = [&](const Vec3& p) {
        int ix = std::min(m - 1, static_cast<int>(p.x / cell_w));
        int iy = std::min(m - 1, static_cast<int>(p.y / cell_w));
        int iz = std::min(m - 1, static_cast<int>(p.z / cell_w));
        return (ix * m + iy) * m + iz;
    };
    for (int i = 0; i < n; ++i) cells[cell_of(state.x[i])].push_back(i);

    // Half stencil: self cell plus 13 neighbors, each unordered cell pair once.
    static const int half[13][3] = {{1, 0, 0},  {0, 1, 0},  {0, 0, 1},  {1, 1, 0},  {1, -1, 0},
                                    {1, 0, 1},  {1, 0, -1}, {0, 1, 1},  {0, 1, -1}, {1, 1, 1},
                                    {1, 1, -1}, {1, -1, 1}, {1, -1, -1}};
    double min_r2 = cutoff * cutoff;
    auto interact = [&](int i, int j) {
        Vec3 d = torus_displacement(state.x[i], state.x[j]);
        double r2 = norm_sq(d);
        if (r2 >= cutoff * cutoff) return;
        min_r2 = std::min(min_r2, r2);
        Vec3 k = pair_force(spec, d);
        forces[i] += k;
        forces[j] -= k;
    };
    for (int cx = 0; cx < m; ++cx)
        for (int cy = 0; cy < m; ++cy)
            for (int cz = 0; cz < m; ++cz) {
                const auto& here = cells[(cx * m + cy) * m + cz];
                for (size_t a = 0; a < here.size(); ++a)
                    for (size_t b = a + 1; b < here.size(); ++b) interact(here[a], here[b]);
                for (const auto& off : half) {
                    int ox = (cx + off[0] + m) % m;
                    int oy = (cy + off[1] + m) % m;
                    int oz = (cz + off[2] + m) % m;
                    const auto& there = cells[(ox * m + oy) * m + oz];
                    for (int i : here)
                        for (int j : there) interact(i, j);
                }
            }
    const double inv_n = 1.0 / n;
    for (auto& f : forces) f *= inv_n;
    return std::sqrt(min_r2);
}

}  // namespace

EnergyReport total_energy(const PhaseState& state, const PotentialSpec& spec) {
    EnergyReport rep;
    const int n = state.n();
    for (const auto& vi : state.v) rep.kinetic += 0.5 * norm_sq(vi);
    double pot = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            pot += potential_value(spec, torus_displacement(state.x[i], state.x[j]));
    rep.potential = pot / n;  // (1/2N) over ordered pairs = (1/N) over unordered
    rep.total = rep.kinetic + rep.potential;
    return rep;
}

double force_all(const PhaseState& state, const PotentialSpec& spec, std::vector<Vec3>& forces,
                 ForceMethod method) {
    return method == ForceMethod::cell_list ? force_cell_list(state, spec, forces)
                                            : force_direct(state, spec, forces);
}

void step(PhaseState& state, const PotentialSpec& spec, double dt, ForceMethod method) {
    std::vector<Vec3> f;
    force_all(state, spec, f, method);
    const int n = state.n();
    for (int i = 0; i < n; ++i) state.v[i] += 0.5 * dt * f[i];
    for (int i = 0; i < n; ++i) state.x[i] = wrap_unit(state.x[i] + dt * state.v[i]);
    force_all(state, spec, f, method);
    for (int i = 0; i < n; ++i) state.v[i] += 0.5 * dt * f[i];
}

std::string to_string(RejectReason r) {
    switch (r) {
        case RejectReason::none: return "none";
        case RejectReason::distance_floor: return "distance_floor";
        case RejectReason::energy_drift: return "energy_drift";
        case RejectReason::non_finite: return "non_finite";
    }
    return "unknown";
}

namespace {

struct AttemptResult {
    RejectReason reject = RejectReason::none;
    EnergyReport ea, eb;
    double min_pair_distance = kInf;
};

// One fixed-dt attempt over the whole horizon. Both trajectories share the
// schedule; forces are cached across the kick-drift-kick split so each step
// costs one assembly per trajectory.
AttemptResult run_attempt(PhaseState a, PhaseState b, const PotentialSpec& spec,
                          const IntegratorConfig& cfg, double dt, long steps_per_obs,
                          const PairObserver& observe) {
    AttemptResult res;
    const int n = a.n();
    std::vector<Vec3> fa, fb;
    double ra = force_all(a, spec, fa, cfg.force_method);
    double rb = force_all(b, spec, fb, cfg.force_method);
    res.min_pair_distance = std::min(ra, rb);

    const EnergyReport ea0 = total_energy(a, spec);
    const EnergyReport eb0 = total_energy(b, spec);
    res.ea = ea0;
    res.eb = eb0;
    if (observe) observe(0, 0.0, a, b);

    auto drift_of = [](const EnergyReport& now, const EnergyReport& start) {
        double scale = std::max(std::abs(start.total), 1e-300);
        return std::abs(now.total - start.total) / scale;
    };

    for (int k = 1; k <= cfg.observations; ++k) {
        for (long s = 0; s < steps_per_obs; ++s) {
            for (int i = 0; i < n; ++i) a.v[i] += 0.5 * dt * fa[i];
            for (int i = 0; i < n; ++i) a.x[i] = wrap_unit(a.x[i] + dt * a.v[i]);
            ra = force_all(a, spec, fa, cfg.force_method);
            for (int i = 0; i < n; ++i) a.v[i] += 0.5 * dt * fa[i];

            for (int i = 0; i < n; ++i) b.v[i] += 0.5 * dt * fb[i];
            for (int i = 0; i < n; ++i) b.x[i] = wrap_unit(b.x[i] + dt * b.v[i]);
            rb = force_all(b, spec, fb, cfg.force_method);
            for (int i = 0; i < n; ++i) b.v[i] += 0.5 * dt * fb[i];

            res.min_pair_distance = std::min({res.min_pair_distance, ra, rb});
            if (res.min_pair_distance < cfg.min_pair_distance_floor) {
                res.reject = RejectReason::distance_floor;
                return res;
            }
        }
        res.ea = total_energy(a, spec);
        res.eb = total_energy(b, spec);
        res.ea.relative_drift = drift_of(res.ea, ea0);
        res.eb.relative_drift = drift_of(res.eb, eb0);
        if (!std::isfinite(res.ea.total) || !std::isfinite(res.eb.total)) {
            res.reject = RejectReason::non_finite;
            return res;
        }
        if (res.ea.relative_drift > cfg.energy_drift_tolerance ||
            res.eb.relative_drift > cfg.energy_drift_tolerance) {
            res.reject = RejectReason::energy_drift;
            return res;
        }
        if (observe) observe(k, k * (cfg.t_end / cfg.observations), a, b);
    }
    return res;
}

}  // namespace

PairRunResult evolve_pair(PhaseState a, PhaseState b, const PotentialSpec& spec,
                          const IntegratorConfig& cfg, const PairObserver& observe) {
    if (a.n() != b.n()) throw std::invalid_argument("evolve_pair: particle counts differ");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("evolve_pair: dt must be > 0");
    if (cfg.t_end < 0.0) throw std::invalid_argument("evolve_pair: t_end must be >= 0");

    PairRunResult out;
    double dt = cfg.dt;
    long steps_per_obs =
        cfg.t_end > 0.0
            ? std::max(1L, std::lround(cfg.t_end / cfg.observations / dt))
            : 0L;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
        AttemptResult att = run_attempt(a, b, spec, cfg, dt, steps_per_obs, observe);
        out.energy_a = att.ea;
        out.energy_b = att.eb;
        out.min_pair_distance = att.min_pair_distance;
        out.halvings = h;
        out.dt_used = dt;
        out.reject = att.reject;
        if (att.reject != RejectReason::energy_drift) return out;  // success or hard reject
        dt *= 0.5;
        steps_per_obs *= 2;
    }
    return out;  // still drifting after max_halvings
}

}  // namespace torstab
