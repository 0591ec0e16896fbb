"""Maximum-likelihood transition paths for a noisy thermohaline box model."""

from ._core import (  # noqa: F401
    RNG_ID,
    SCHEME_ID,
    DriftModel,
    NondimensionalParams,
    SolverError,
    SpatialGrid,
    TimeGrid,
    bridge_path,
    cessi,
    double_well,
    drift_2d,
    drift_reduced,
    euler_maruyama_histogram,
    find_equilibria,
    linear_ou,
    potential,
    solve_backward,
    solve_forward,
    stationary_density,
    sweep_noise,
    zero_drift,
)

__version__ = "0.1.0"
