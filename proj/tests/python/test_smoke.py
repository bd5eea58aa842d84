"""Smoke tests for the compiled torstab module."""

import math

import pytest

torstab = pytest.importorskip("torstab")


@pytest.fixture(scope="module")
def spec():
    return torstab.make_potential(1.5, 1.0, image_shells=1, taper_radius=0.5)


def test_potential_spec_fields(spec):
    assert spec.alpha == 1.5
    assert spec.amplitude == 1.0
    assert spec.mean_shift > 0.0
    assert spec.phi_min < 0.0


def test_make_potential_rejects_bad_alpha():
    with pytest.raises(ValueError):
        torstab.make_potential(2.5, 1.0)


def test_torus_displacement_wraps():
    d = torstab.torus_displacement((0.9, 0.0, 0.0), (0.1, 0.0, 0.0))
    assert d[0] == pytest.approx(-0.2)
    assert d[1] == 0.0 and d[2] == 0.0


def test_force_is_odd(spec):
    fp = torstab.force(spec, (0.2, 0.1, -0.05))
    fm = torstab.force(spec, (-0.2, -0.1, 0.05))
    for a, b in zip(fp, fm):
        assert a == pytest.approx(-b, rel=1e-12)


def test_singularity_raises(spec):
    with pytest.raises(torstab.SingularityError):
        torstab.potential_value(spec, (0.0, 0.0, 0.0))


def test_energy_of_two_particles():
    raw = torstab.make_potential(1.5, 0.0)  # free case
    state = torstab.PhaseState(
        positions=[(0.1, 0.1, 0.1), (0.6, 0.1, 0.1)],
        velocities=[(1.0, 0.0, 0.0), (1.0, 0.0, 0.0)],
    )
    e = torstab.total_energy(state, raw)
    assert e.kinetic == pytest.approx(1.0)
    assert e.potential == 0.0


def test_free_flight_positions():
    free = torstab.make_potential(1.5, 0.0)
    z0 = torstab.PhaseState(positions=[(0.0, 0.0, 0.0), (0.5, 0.5, 0.5)],
                            velocities=[(0.25, 0.0, 0.0), (0.0, -0.5, 0.0)])
    z1 = torstab.step(z0, free, dt=1.0 / 1024.0, steps=1024)
    x0 = z1.positions[0]
    assert x0[0] == pytest.approx(0.25)
    x1 = z1.positions[1]
    assert x1[1] == pytest.approx(0.0)


def test_gibbs_sample_shapes(spec):
    z = torstab.sample_gibbs(beta=1.0, n=8, spec=spec, seed=3, burn_in_sweeps=100)
    assert z.n == 8
    assert all(0.0 <= c < 1.0 for p in z.positions for c in p)


def test_norm1_and_overlap(spec):
    z = torstab.sample_gibbs(beta=1.0, n=6, spec=spec, seed=4, burn_in_sweeps=50)
    assert torstab.norm1(z, z) == 0.0
    assert torstab.pairing_overlap(z, z) == 1.0


def test_draw_shift_scaling():
    z = torstab.PhaseState(positions=[(0.5, 0.5, 0.5)] * 25,
                           velocities=[(1.0, 0.0, 0.0)] * 25)
    dv, n1 = torstab.draw_shift("gaussian_velocity", z, seed=9, sigma=1.0)
    assert len(dv) == 25
    total = sum(math.sqrt(sum(c * c for c in d)) for d in dv)
    assert n1 == pytest.approx(total / 50.0)


def test_derive_seed_is_stable():
    a = torstab.derive_seed(1, 2, "positions")
    assert a == torstab.derive_seed(1, 2, "positions")
    assert a != torstab.derive_seed(1, 2, "velocities")


def test_estimate_q_zero_shift_is_exactly_zero(spec):
    curve = torstab.estimate_q(beta=1.0, n=4, spec=spec, shift_kind="none",
                               t_end=0.05, observations=5, samples=3,
                               seed=11, burn_in_sweeps=30)
    assert all(q == 0.0 for q in curve.q)
    assert curve.samples_rejected == 0


def test_estimate_q_and_fit(spec):
    curve = torstab.estimate_q(beta=1.0, n=6, spec=spec, sigma=1.0,
                               t_end=0.2, observations=5, samples=8,
                               seed=12, burn_in_sweeps=100)
    assert curve.delta_n == pytest.approx(6 ** -0.5)
    assert len(curve.times) == 6
    assert curve.q[1] > 0.0
    fit = torstab.fit_linear_growth(curve)
    assert math.isfinite(fit.slope)
    assert fit.envelope_max_positive_residual <= 1e-12


def test_run_config_qcurve(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        """
[potential]
alpha = 1.5
amplitude = 1.0

[gibbs]
beta = 1.0
n = 4
burn_in_sweeps = 50

[shift]
kind = gaussian_velocity
sigma = 1.0

[integrator]
dt = 0.002
t_end = 0.05
observations = 5

[monte_carlo]
samples = 3
seed = 5
"""
    )
    code, summary_path, summary_json = torstab.run_config("qcurve", str(cfg),
                                                          str(tmp_path / "out"))
    assert code == 0
    assert (tmp_path / "out" / "qcurve.csv").exists()
    assert "envelope_slope" in summary_json
