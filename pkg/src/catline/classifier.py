"""Binary decision from the steady-state logical magnetization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .collision import CollisionParams, CollisionTrace, run_collisions
from .dynamics import SystemParams
from .states import CatBasis, auto_dim, cat_basis, plus_state

Z_RANGE_ATOL = 1e-6
DEFAULT_WINDOW = 200
# Mixed streams carry a per-collision sawtooth of order sin^2(eps_x tau),
# so a classifier needs a looser detector than a single-spec run.
DEFAULT_CLASSIFY_TOL = 0.05


@dataclass
class Decision:
    label: int
    z_ss: float
    converged: bool
    n_used: int
    trace: CollisionTrace | None = field(default=None, repr=False, compare=False)


def classify(z_ss: float) -> int:
    """0 when ``z_ss >= 0`` (inclusive), 1 otherwise."""
    z = float(z_ss)
    if not np.isfinite(z) or abs(z) > 1.0 + Z_RANGE_ATOL:
        raise ValueError(f"z_ss={z_ss!r} outside [-1, 1]")
    return 0 if z >= 0.0 else 1


def classify_reservoirs(
    sys: SystemParams,
    cp: CollisionParams,
    basis: CatBasis | None = None,
    window: int = DEFAULT_WINDOW,
    tol: float = DEFAULT_CLASSIFY_TOL,
) -> Decision:
    """Run the probe from ``|+>`` against the reservoir stream and decide.

    The run stops when the steady-state detector fires.  Otherwise the
    decision uses the mean over the trailing window and is flagged as not
    converged.
    """
    if basis is None:
        basis = cat_basis(sys.alpha, auto_dim(sys.alpha))
    trace = run_collisions(plus_state(basis).dm(), sys, cp, basis, detector=(window, tol))
    if trace.z_ss is not None:
        z_ss, converged, n_used = trace.z_ss, True, int(trace.steady_state_index)
    else:
        z_ss = float(np.mean(trace.z[-window:]))
        converged, n_used = False, len(trace)
    return Decision(classify(z_ss), z_ss, converged, n_used, trace)
