"""Paired-trajectory stability of mean-field particle dynamics on the 3-torus.

The heavy lifting lives in the compiled ``torstab._core`` module; this package
re-exports its public surface.
"""

from torstab._core import (  # noqa: F401
    ConfigError,
    EnergyReport,
    GrowthFit,
    PhaseState,
    PotentialSpec,
    QCurve,
    SingularityError,
    derive_seed,
    draw_shift,
    estimate_q,
    fit_linear_growth,
    force,
    force_all,
    make_potential,
    norm1,
    pairing_overlap,
    potential_value,
    run_config,
    sample_gibbs,
    step,
    torus_displacement,
    total_energy,
)

__all__ = [
    "ConfigError",
    "EnergyReport",
    "GrowthFit",
    "PhaseState",
    "PotentialSpec",
    "QCurve",
    "SingularityError",
    "derive_seed",
    "draw_shift",
    "estimate_q",
    "fit_linear_growth",
    "force",
    "force_all",
    "make_potential",
    "norm1",
    "pairing_overlap",
    "potential_value",
    "run_config",
    "sample_gibbs",
    "step",
    "torus_displacement",
    "total_energy",
]

__version__ = "0.1.0"
