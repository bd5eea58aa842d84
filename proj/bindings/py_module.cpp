// Python bindings for the core operations: potential construction, dynamics,
// Gibbs sampling, shift draws and the Q(t) estimator.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>

#include "torstab/config.hpp"
#include "torstab/geometry.hpp"
#include "torstab/harness.hpp"
#include "torstab/io.hpp"
#include "torstab/stability.hpp"

namespace py = pybind11;
using namespace torstab;

namespace {

using Triple = std::array<double, 3>;

Vec3 to_vec(const Triple& t) { return {t[0], t[1], t[2]}; }
Triple from_vec(const Vec3& v) { return {v.x, v.y, v.z}; }

std::vector<Triple> from_vecs(const std::vector<Vec3>& vs) {
    std::vector<Triple> out;
    out.reserve(vs.size());
    for (const auto& v : vs) out.push_back(from_vec(v));
    return out;
}

std::vector<Vec3> to_vecs(const std::vector<Triple>& ts) {
    std::vector<Vec3> out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(to_vec(t));
    return out;
}

ShiftSpec shift_from_kwargs(const std::string& kind, double sigma, double delta_m, double r_max) {
    if (kind == "gaussian_velocity") return GaussianVelocityShift{sigma};
    if (kind == "compact_velocity") return CompactVelocityShift{delta_m};
    if (kind == "energy_sphere") return EnergySphereShift{r_max};
    if (kind == "none") return NoShift{};
    throw std::invalid_argument("unknown shift kind '" + kind + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Paired-trajectory stability of mean-field particle dynamics on the 3-torus";

    py::register_exception<singularity_error>(m, "SingularityError");
    py::register_exception<config_error>(m, "ConfigError");

    py::class_<PotentialSpec>(m, "PotentialSpec")
        .def_readonly("alpha", &PotentialSpec::alpha)
        .def_readonly("amplitude", &PotentialSpec::amplitude)
        .def_readonly("image_shells", &PotentialSpec::image_shells)
        .def_readonly("taper_radius", &PotentialSpec::taper_radius)
        .def_readonly("mean_shift", &PotentialSpec::mean_shift)
        .def_readonly("phi_min", &PotentialSpec::phi_min)
        .def("__repr__", [](const PotentialSpec& s) {
            return "PotentialSpec(alpha=" + format_double(s.alpha) +
                   ", amplitude=" + format_double(s.amplitude) +
                   ", image_shells=" + std::to_string(s.image_shells) +
                   ", taper_radius=" + format_double(s.taper_radius) + ")";
        });

    m.def("make_potential", &make_potential, py::arg("alpha"), py::arg("amplitude"),
          py::arg("image_shells") = 1, py::arg("taper_radius") = 0.5,
          "Validated potential with calibrated zero mean and certified phi_min");

    m.def(
        "potential_value",
        [](const PotentialSpec& s, const Triple& x) { return potential_value(s, to_vec(x)); },
        py::arg("spec"), py::arg("x"));
    m.def(
        "force",
        [](const PotentialSpec& s, const Triple& x) { return from_vec(pair_force(s, to_vec(x))); },
        py::arg("spec"), py::arg("x"), "Pair force K(x) = -grad phi(x)");
    m.def(
        "torus_displacement",
        [](const Triple& a, const Triple& b) {
            return from_vec(torus_displacement(to_vec(a), to_vec(b)));
        },
        py::arg("a"), py::arg("b"), "Minimal-image representative of a - b");

    py::class_<PhaseState>(m, "PhaseState")
        .def(py::init([](const std::vector<Triple>& x, const std::vector<Triple>& v) {
                 if (x.size() != v.size() || x.size() < 1)
                     throw std::invalid_argument("positions and velocities must match");
                 PhaseState s;
                 s.x = to_vecs(x);
                 for (auto& xi : s.x) xi = wrap_unit(xi);
                 s.v = to_vecs(v);
                 return s;
             }),
             py::arg("positions"), py::arg("velocities"))
        .def_property_readonly("n", &PhaseState::n)
        .def_property_readonly("positions", [](const PhaseState& s) { return from_vecs(s.x); })
        .def_property_readonly("velocities", [](const PhaseState& s) { return from_vecs(s.v); });

    py::class_<EnergyReport>(m, "EnergyReport")
        .def_readonly("kinetic", &EnergyReport::kinetic)
        .def_readonly("potential", &EnergyReport::potential)
        .def_readonly("total", &EnergyReport::total)
        .def_readonly("relative_drift", &EnergyReport::relative_drift);

    m.def("total_energy", &total_energy, py::arg("state"), py::arg("spec"));
    m.def(
        "force_all",
        [](const PhaseState& st, const PotentialSpec& sp) {
            std::vector<Vec3> f;
            force_all(st, sp, f);
            return from_vecs(f);
        },
        py::arg("state"), py::arg("spec"), "Mean-field forces (1/N) sum K");
    m.def(
        "step",
        [](PhaseState st, const PotentialSpec& sp, double dt, int steps) {
            for (int s = 0; s < steps; ++s) step(st, sp, dt);
            return st;
        },
        py::arg("state"), py::arg("spec"), py::arg("dt"), py::arg("steps") = 1,
        "Velocity-Verlet steps; returns the evolved state");

    m.def(
        "sample_gibbs",
        [](double beta, int n, const PotentialSpec& spec, std::uint64_t seed, long burn_in_sweeps) {
            GibbsParams p{beta, n, spec};
            ChainConfig c;
            c.burn_in_sweeps = burn_in_sweeps;
            RngEngine pos = make_engine(seed, 0, "positions");
            RngEngine vel = make_engine(seed, 0, "velocities");
            return sample_gibbs(p, c, pos, vel);
        },
        py::arg("beta"), py::arg("n"), py::arg("spec"), py::arg("seed") = 1,
        py::arg("burn_in_sweeps") = 2000);

    m.def(
        "draw_shift",
        [](const std::string& kind, const PhaseState& z0, std::uint64_t seed, double sigma,
           double delta_m, double r_max) {
            RngEngine rng = make_engine(seed, 0, "shift");
            ShiftSample s = draw_shift(shift_from_kwargs(kind, sigma, delta_m, r_max), z0, rng);
            return py::make_tuple(from_vecs(s.delta_v), s.norm1);
        },
        py::arg("kind"), py::arg("z0"), py::arg("seed") = 1, py::arg("sigma") = 1.0,
        py::arg("delta_m") = 1.0, py::arg("r_max") = 1.0,
        "Draws (delta_v, norm1) from a shift distribution");

    m.def("norm1", &norm1, py::arg("a"), py::arg("b"),
          "(1/2N) sum (torus distance + velocity distance)");
    m.def("pairing_overlap", &pairing_overlap, py::arg("a"), py::arg("b"));
    m.def(
        "derive_seed",
        [](std::uint64_t master, std::uint64_t index, const std::string& purpose) {
            return derive_seed(master, index, purpose);
        },
        py::arg("master"), py::arg("index"), py::arg("purpose"));

    py::class_<QCurve>(m, "QCurve")
        .def_readonly("times", &QCurve::times)
        .def_readonly("q", &QCurve::q)
        .def_readonly("q_stderr", &QCurve::q_stderr)
        .def_readonly("m_effective", &QCurve::m_effective)
        .def_readonly("samples_requested", &QCurve::samples_requested)
        .def_readonly("samples_rejected", &QCurve::samples_rejected)
        .def_readonly("delta_n", &QCurve::delta_n)
        .def_readonly("epsilon", &QCurve::epsilon);

    py::class_<GrowthFit>(m, "GrowthFit")
        .def_readonly("slope", &GrowthFit::slope)
        .def_readonly("slope_stderr", &GrowthFit::slope_stderr)
        .def_readonly("intercept", &GrowthFit::intercept)
        .def_readonly("envelope_slope", &GrowthFit::envelope_slope)
        .def_readonly("envelope_max_positive_residual",
                      &GrowthFit::envelope_max_positive_residual)
        .def_readonly("max_positive_residual", &GrowthFit::max_positive_residual);

    m.def("fit_linear_growth", &fit_linear_growth, py::arg("curve"));

    m.def(
        "estimate_q",
        [](double beta, int n, const PotentialSpec& spec, const std::string& shift_kind,
           double sigma, double epsilon, double t_end, double dt, int observations, int samples,
           std::uint64_t seed, int workers, long burn_in_sweeps, double r_max, double delta_m) {
            GibbsParams params{beta, n, spec};
            ChainConfig chain;
            chain.burn_in_sweeps = burn_in_sweeps;
            TheoremParams theorem;
            theorem.epsilon = epsilon;
            IntegratorConfig integ;
            integ.t_end = t_end;
            integ.dt = dt;
            integ.observations = observations;
            McConfig mc{samples, seed, workers};
            QOptions opts;
            opts.proof_terms = false;
            opts.overlap = false;
            QEstimate est = estimate_q(params, chain, shift_from_kwargs(shift_kind, sigma, delta_m, r_max),
                                       theorem, integ, mc, opts);
            return est.curve;
        },
        py::arg("beta"), py::arg("n"), py::arg("spec"), py::arg("shift_kind") = "gaussian_velocity",
        py::arg("sigma") = 1.0, py::arg("epsilon") = 0.0, py::arg("t_end") = 1.0,
        py::arg("dt") = 1e-3, py::arg("observations") = 20, py::arg("samples") = 50,
        py::arg("seed") = 1, py::arg("workers") = 0, py::arg("burn_in_sweeps") = 1000,
        py::arg("r_max") = 1.0, py::arg("delta_m") = 1.0,
        "Monte Carlo Q(t) curve; call py::gil not held during the run",
        py::call_guard<py::gil_scoped_release>());

    m.def(
        "run_config",
        [](const std::string& subcommand, const std::string& config_path,
           const std::string& out_dir) {
            RunConfig cfg = load_config(config_path);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            RunOutcome out;
            if (subcommand == "qcurve") {
                out = run_qcurve(cfg);
            } else if (subcommand == "position-recipe") {
                out = run_position_recipe(cfg);
            } else if (subcommand == "sweep") {
                out = run_sweep(cfg);
            } else if (subcommand == "check-gibbs") {
                out = run_checks(cfg, "gibbs");
            } else if (subcommand == "check-shift") {
                out = run_checks(cfg, "shift");
            } else if (subcommand == "check-potential") {
                out = run_checks(cfg, "potential");
            } else {
                throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
            }
            return std::tuple<int, std::string, std::string>(out.exit_code, out.summary_path,
                                                             out.summary.dump());
        },
        py::arg("subcommand"), py::arg("config_path"), py::arg("out_dir") = "",
        "Runs a harness subcommand; returns (exit_code, summary_path, summary_json)",
        py::call_guard<py::gil_scoped_release>());
}
