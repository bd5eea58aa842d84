#include "torstab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "torstab/geometry.hpp"
#include "torstab/parallel.hpp"

namespace torstab {

double norm1(const PhaseState& a, const PhaseState& b) {
    if (a.n() != b.n()) throw std::invalid_argument("norm1: particle counts differ");
    double s = 0.0;
    for (int i = 0; i < a.n(); ++i)
        s += torus_distance(a.x[i], b.x[i]) + norm(a.v[i] - b.v[i]);
    return s / (2.0 * a.n());
}

ResolvedTheoremParams resolve_theorem_params(const TheoremParams& tp, double alpha, double beta,
                                             double phi_min, int n) {
    ResolvedTheoremParams r;
    r.epsilon = tp.epsilon > 0.0 ? tp.epsilon : std::min(1.0 - alpha / 3.0, 0.5);
    r.delta_n = std::pow(static_cast<double>(n), -r.epsilon);
    r.a_exponent = tp.a_exponent > 0.0 ? tp.a_exponent : 2.0 * alpha / 3.0 + 0.1;
    if (!(r.a_exponent > 2.0 * alpha / 3.0))
        throw std::invalid_argument("theorem: exponent a must exceed 2*alpha/3");
    r.epsilon_out_of_range = r.epsilon > 1.0 - alpha / 3.0 + 1e-12;

    int l_wanted = tp.neighbor_l > 0 ? tp.neighbor_l
                                     : static_cast<int>(std::ceil(36.0 / (2.0 - alpha)));
    int l_max = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
    l_max = std::min(l_max, n - 1);
    r.neighbor_l = std::max(1, std::min(l_wanted, l_max));
    r.l_capped = r.neighbor_l < l_wanted;
    double n_regime = std::pow(6.0, 4.0) / ((2.0 - alpha) * (2.0 - alpha));
    r.below_theorem_regime = n < n_regime;
    r.c_beta = std::exp(-beta * phi_min);
    r.c_beta_a = std::pow(r.c_beta, r.a_exponent);
    r.c_beta_half = std::exp(-0.5 * beta * phi_min);
    return r;
}

std::vector<std::vector<int>> neighbor_sets(const PhaseState& state, int l) {
    const int n = state.n();
    if (l < 1 || l >= n) throw std::invalid_argument("neighbor_sets: need 1 <= L < N");
    std::vector<std::vector<int>> sets(n);
    std::vector<std::pair<double, int>> row;
    row.reserve(n - 1);
    for (int i = 0; i < n; ++i) {
        row.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = norm_sq(torus_displacement(state.x[i], state.x[j]));
            row.emplace_back(d2, j);
        }
        std::partial_sort(row.begin(), row.begin() + l, row.end());  // ties: smaller index first
        sets[i].resize(l);
        for (int t = 0; t < l; ++t) sets[i][t] = row[t].second;
        std::sort(sets[i].begin(), sets[i].end());
    }
    return sets;
}

ProofTermSample proof_term_sample(const PhaseState& a, const PhaseState& b,
                                  const PotentialSpec& spec, int l, double delta_n) {
    const int n = a.n();
    ProofTermSample out;
    auto ca = neighbor_sets(a, l);
    auto cb = neighbor_sets(b, l);
    const double exponent = spec.alpha + 1.0;
    std::vector<char> in_union(n, 0);
    double s2_max = 0.0;
    for (int i = 0; i < n; ++i) {
        std::fill(in_union.begin(), in_union.end(), 0);
        for (int j : ca[i]) in_union[j] = 1;
        for (int j : cb[i]) in_union[j] = 1;
        double far = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            Vec3 da = torus_displacement(a.x[i], a.x[j]);
            Vec3 db = torus_displacement(b.x[i], b.x[j]);
            if (in_union[j]) {
                out.s1 += norm(pair_force(spec, da));
                out.s1_delta += norm(pair_force(spec, db));
            } else {
                far += std::pow(norm_sq(da), -0.5 * exponent) +
                       std::pow(norm_sq(db), -0.5 * exponent);
            }
        }
        s2_max = std::max(s2_max, far / n);
    }
    const double nn = static_cast<double>(n) * n;
    out.s1 /= delta_n * nn;
    out.s1_delta /= delta_n * nn;
    out.s2_majorant = s2_max;
    return out;
}

double pairing_overlap(const PhaseState& a, const PhaseState& b) {
    if (a.n() != b.n()) throw std::invalid_argument("pairing_overlap: particle counts differ");
    const int n = a.n();
    int same = 0;
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = -1;
        for (int j = 0; j < n; ++j) {
            double d = torus_distance(a.x[i], b.x[j]) + norm(a.v[i] - b.v[j]);
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        if (arg == i) ++same;
    }
    return static_cast<double>(same) / n;
}

namespace {

struct SampleRecord {
    bool accepted = false;
    RejectReason reject = RejectReason::none;
    bool shift_infeasible = false;
    int halvings = 0;
    std::vector<double> logterm, velterm, s1, s1d, s2, overlap;
    double max_velterm = 0.0;
    double shift_norm1_t0 = 0.0;
    double shift_position_part_t0 = 0.0;
};

struct MeanSe {
    double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<SampleRecord>& recs, int k,
               const std::vector<double> SampleRecord::* field) {
    double sum = 0.0;
    long m = 0;
    for (const auto& r : recs)
        if (r.accepted) {
            sum += (r.*field)[k];
            ++m;
        }
    MeanSe out;
    if (m == 0) return out;
    out.mean = sum / m;
    if (m > 1) {
        double ss = 0.0;
        for (const auto& r : recs)
            if (r.accepted) {
                double d = (r.*field)[k] - out.mean;
                ss += d * d;
            }
        out.se = std::sqrt(ss / (m - 1) / m);
    }
    return out;
}

}  // namespace

QEstimate estimate_q(const GibbsParams& params, const ChainConfig& chain, const ShiftSpec& shift,
                     const TheoremParams& theorem, const IntegratorConfig& integrator,
                     const McConfig& mc, const QOptions& options) {
    if (mc.samples < 2) throw std::invalid_argument("estimate_q: need at least 2 samples");
    QEstimate est;
    est.theorem = resolve_theorem_params(theorem, params.spec.alpha, params.beta,
                                         params.spec.phi_min, params.n);
    if (est.theorem.epsilon_out_of_range)
        est.warnings.push_back("epsilon exceeds 1 - alpha/3; outside the theorem's range");
    if (est.theorem.l_capped)
        est.warnings.push_back("neighbor count L capped at floor(sqrt(N))");
    if (est.theorem.below_theorem_regime)
        est.warnings.push_back("N below the 6^4/(2-alpha)^2 regime; diagnostics still run");

    const double delta_n = est.theorem.delta_n;
    const int n_obs = integrator.observations + 1;
    const int M = mc.samples;

    std::vector<SampleRecord> recs(M);

    auto run_sample = [&](int i) {
        SampleRecord& rec = recs[i];
        rec.logterm.assign(n_obs, 0.0);
        rec.velterm.assign(n_obs, 0.0);
        if (options.proof_terms) {
            rec.s1.assign(n_obs, 0.0);
            rec.s1d.assign(n_obs, 0.0);
            rec.s2.assign(n_obs, 0.0);
        }
        if (options.overlap) rec.overlap.assign(n_obs, 0.0);

        RngEngine pos_rng = make_engine(mc.seed, i, "positions");
        RngEngine vel_rng = make_engine(mc.seed, i, "velocities");
        RngEngine shift_rng = make_engine(mc.seed, i, "shift");

        PhaseState z0 = sample_gibbs(params, chain, pos_rng, vel_rng);
        ShiftSample delta;
        try {
            delta = draw_shift(shift, z0, shift_rng);
        } catch (const std::runtime_error&) {
            rec.shift_infeasible = true;
            return;
        }
        PhaseState zb = apply_shift(z0, delta);

        if (options.preroll_tau > 0.0) {
            IntegratorConfig pre = integrator;
            pre.t_end = options.preroll_tau;
            pre.observations = 1;
            PhaseState za_end, zb_end;
            auto res = evolve_pair(z0, zb, params.spec, pre,
                                   [&](int k, double, const PhaseState& a, const PhaseState& b) {
                                       if (k == 1) {
                                           za_end = a;
                                           zb_end = b;
                                       }
                                   });
            if (res.reject != RejectReason::none) {
                rec.reject = res.reject;
                return;
            }
            z0 = std::move(za_end);
            zb = std::move(zb_end);
        }

        {
            double pos_part = 0.0, vel_part = 0.0;
            for (int p = 0; p < z0.n(); ++p) {
                pos_part += torus_distance(z0.x[p], zb.x[p]);
                vel_part += norm(z0.v[p] - zb.v[p]);
            }
            rec.shift_norm1_t0 = (pos_part + vel_part) / (2.0 * z0.n());
            rec.shift_position_part_t0 = pos_part / (2.0 * z0.n());
        }

        auto observe = [&](int k, double, const PhaseState& a, const PhaseState& b) {
            double d = norm1(a, b);
            rec.logterm[k] = std::log1p(d / delta_n);
            double vel_part = 0.0;
            for (int p = 0; p < a.n(); ++p) vel_part += norm(a.v[p] - b.v[p]);
            vel_part /= 2.0 * a.n();
            rec.velterm[k] = vel_part / (delta_n + d);
            if (options.proof_terms) {
                ProofTermSample pt =
                    proof_term_sample(a, b, params.spec, est.theorem.neighbor_l, delta_n);
                rec.s1[k] = pt.s1;
                rec.s1d[k] = pt.s1_delta;
                rec.s2[k] = pt.s2_majorant;
            }
            if (options.overlap) rec.overlap[k] = pairing_overlap(a, b);
        };

        PairObserver obs = observe;
        if (i == 0 && options.dump_observer) {
            obs = [&, inner = options.dump_observer](int k, double t, const PhaseState& a,
                                                     const PhaseState& b) {
                observe(k, t, a, b);
                inner(k, t, a, b);
            };
        }

        auto res = evolve_pair(z0, zb, params.spec, integrator, obs);
        if (res.reject != RejectReason::none) {
            rec.reject = res.reject;
            return;
        }
        rec.halvings = res.halvings;
        rec.max_velterm = *std::max_element(rec.velterm.begin(), rec.velterm.end());
        rec.accepted = true;
    };

    parallel_for(M, mc.workers, run_sample);

    // Deterministic reduction in sample order.
    for (const auto& rec : recs) {
        if (rec.accepted) {
            est.rejections.halvings_histogram[std::min<int>(rec.halvings, 3)] += 1;
        } else if (rec.shift_infeasible) {
            est.rejections.shift_infeasible += 1;
        } else if (rec.reject == RejectReason::distance_floor) {
            est.rejections.distance_floor += 1;
        } else if (rec.reject == RejectReason::energy_drift) {
            est.rejections.energy_drift += 1;
        } else {
            est.rejections.non_finite += 1;
        }
    }
    int m_eff = 0;
    for (const auto& r : recs) m_eff += r.accepted ? 1 : 0;
    if (m_eff == 0) {
        throw std::runtime_error(
            "estimate_q: all samples rejected (floor=" +
            std::to_string(est.rejections.distance_floor) +
            ", drift=" + std::to_string(est.rejections.energy_drift) +
            ", shift=" + std::to_string(est.rejections.shift_infeasible) +
            ", non_finite=" + std::to_string(est.rejections.non_finite) + ")");
    }

    est.curve.samples_requested = M;
    est.curve.samples_rejected = M - m_eff;
    est.curve.delta_n = delta_n;
    est.curve.epsilon = est.theorem.epsilon;
    est.proof.neighbor_l = est.theorem.neighbor_l;
    est.proof.l_capped = est.theorem.l_capped;

    const double dt_obs = integrator.t_end / integrator.observations;
    for (int k = 0; k < n_obs; ++k) {
        double t = k * dt_obs;
        est.curve.times.push_back(t);
        auto q = mean_se(recs, k, &SampleRecord::logterm);
        est.curve.q.push_back(q.mean);
        est.curve.q_stderr.push_back(q.se);
        est.curve.m_effective.push_back(m_eff);
        if (options.proof_terms) {
            est.proof.times.push_back(t);
            auto a = mean_se(recs, k, &SampleRecord::s1);
            auto b = mean_se(recs, k, &SampleRecord::s1d);
            auto c = mean_se(recs, k, &SampleRecord::s2);
            est.proof.s1.push_back(a.mean);
            est.proof.s1_stderr.push_back(a.se);
            est.proof.s1_delta.push_back(b.mean);
            est.proof.s1_delta_stderr.push_back(b.se);
            est.proof.s2_majorant.push_back(c.mean);
            est.proof.s2_majorant_stderr.push_back(c.se);
        }
        if (options.overlap) {
            auto o = mean_se(recs, k, &SampleRecord::overlap);
            est.overlap_mean.push_back(o.mean);
            est.overlap_stderr.push_back(o.se);
        }
    }
    for (const auto& r : recs)
        if (r.accepted) est.max_velocity_term = std::max(est.max_velocity_term, r.max_velterm);

    double split_sum = 0.0, norm_sum = 0.0;
    for (const auto& r : recs)
        if (r.accepted) {
            split_sum += r.shift_position_part_t0;
            norm_sum += r.shift_norm1_t0;
        }
    est.shift_norm1_mean = norm_sum / m_eff;
    est.shift_position_share = norm_sum > 0.0 ? split_sum / norm_sum : 0.0;
    return est;
}

GrowthFit fit_linear_growth(const QCurve& curve) {
    const int n = static_cast<int>(curve.times.size());
    if (n < 4) throw std::invalid_argument("fit_linear_growth: need at least 4 time points");
    double t_min = *std::min_element(curve.times.begin(), curve.times.end());
    double t_max = *std::max_element(curve.times.begin(), curve.times.end());
    if (!(t_max > t_min)) throw std::invalid_argument("fit_linear_growth: degenerate time grid");

    GrowthFit fit;
    fit.points = n;

    double max_se = *std::max_element(curve.q_stderr.begin(), curve.q_stderr.end());
    double sw = 0, swt = 0, swtt = 0, swq = 0, swtq = 0;
    for (int k = 0; k < n; ++k) {
        double se = curve.q_stderr[k];
        double w = max_se > 0.0 ? 1.0 / std::max(se * se, 1e-12 * max_se * max_se) : 1.0;
        double t = curve.times[k], q = curve.q[k];
        sw += w;
        swt += w * t;
        swtt += w * t * t;
        swq += w * q;
        swtq += w * t * q;
    }
    double det = sw * swtt - swt * swt;
    fit.slope = (sw * swtq - swt * swq) / det;
    fit.intercept = (swtt * swq - swt * swtq) / det;
    fit.slope_stderr = std::sqrt(std::max(0.0, sw / det));
    fit.intercept_stderr = std::sqrt(std::max(0.0, swtt / det));

    for (int k = 0; k < n; ++k) {
        double r = curve.q[k] - (fit.intercept + fit.slope * curve.times[k]);
        if (r > 0) {
            ++fit.positive_residuals;
            fit.max_positive_residual = std::max(fit.max_positive_residual, r);
        } else if (r < 0) {
            ++fit.negative_residuals;
        }
    }

    // Anchored envelope: smallest slope B with Q(t0) + B (t - t0) above every
    // point, i.e. the maximal chord from the first point.
    double t0 = curve.times[0], q0 = curve.q[0];
    double b = 0.0;
    bool first = true;
    for (int k = 0; k < n; ++k) {
        if (curve.times[k] <= t0) continue;
        double chord = (curve.q[k] - q0) / (curve.times[k] - t0);
        b = first ? chord : std::max(b, chord);
        first = false;
    }
    fit.envelope_slope = b;
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        double r = curve.q[k] - (q0 + b * (curve.times[k] - t0));
        worst = std::max(worst, r);
    }
    fit.envelope_max_positive_residual = worst;
    return fit;
}

}  // namespace torstab
