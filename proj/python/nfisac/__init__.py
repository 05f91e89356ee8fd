"""Near-field ISAC lifted super-resolution."""

import json

from ._core import (
    ArrayGeometry,
    ConfigError,
    LiftedDictionary,
    Role,
    TruncationOrders,
    bessel_j,
    exact_steering,
    farfield_steering,
    fresnel_steering,
    load_config,
    truncation_orders,
    truncation_orders_for_tail,
)
from ._core import run as _run

__all__ = [
    "ArrayGeometry",
    "ConfigError",
    "LiftedDictionary",
    "Role",
    "TruncationOrders",
    "bessel_j",
    "exact_steering",
    "farfield_steering",
    "fresnel_steering",
    "load_config",
    "run",
    "truncation_orders",
    "truncation_orders_for_tail",
]


def run(config, seed=None, out=None, solver_tol=None, max_iters=None):
    """Run one trial; returns the parsed report plus the raw curve and estimate tables."""
    res = _run(str(config), seed=seed, out=None if out is None else str(out),
               solver_tol=solver_tol, max_iters=max_iters)
    res["report"] = json.loads(res["report"])
    return res
