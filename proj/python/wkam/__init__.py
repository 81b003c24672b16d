from ._wkam import (
    ConfigError,
    ConvergenceError,
    InvariantError,
    Solution,
    action,
    alpha,
    peierls_barrier,
    run_criterion,
    standard_map_orbit,
    systems,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "InvariantError",
    "Solution",
    "action",
    "alpha",
    "peierls_barrier",
    "run_criterion",
    "standard_map_orbit",
    "systems",
]
