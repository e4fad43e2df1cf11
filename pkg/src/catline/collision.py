"""Repeated-interaction (collision) model for the Kerr-cat probe.

Each collision couples the probe to a fresh reservoir unit through the
cat-basis exchange ``eps_x (|C+><C-| (x) |C-><C+| + h.c.)``, evolves the
pair under the master equation for ``tau`` (loss acts on the probe only),
and traces the unit out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .dynamics import (
    POSITIVITY_FAIL,
    TRACE_FAIL,
    Generator,
    SystemParams,
    kerr_cat_hamiltonian,
    steps_for,
)
from .errors import DimensionError, NumericalFailure
from .operators import (
    DensityMatrix,
    Operator,
    SpaceLayout,
    _ptrace_array,
    annihilation,
    number,
)
from .states import CatBasis, logical_amplitudes, logical_state

MIXING_MODES = ("deterministic-roundrobin", "seeded-random")
RESERVOIR_MODELS = ("logical-2level", "full-fock")

WEIGHT_ATOL = 1e-12
Z_ATOL = 1e-8


@dataclass(frozen=True)
class ReservoirSpec:
    """Pure unit state ``cos(theta/2)|C+> + sin(theta/2) e^{-i phi}|C->`` and its weight."""

    theta: float
    phi: float = 0.0
    weight: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("reservoir angles must be finite")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"reservoir weight must lie in [0, 1], got {self.weight}")


@dataclass(frozen=True)
class CollisionParams:
    eps_x: float = 1e-3
    tau: float = 113.01
    n_collisions: int = 5000
    reservoirs: tuple[ReservoirSpec, ...] = (ReservoirSpec(0.0),)
    mixing: str = "deterministic-roundrobin"
    seed: int = 0
    reservoir_model: str = "logical-2level"
    probe_dissipation: bool = True
    max_dt: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "reservoirs", tuple(self.reservoirs))
        if self.eps_x < 0:
            raise ValueError("eps_x must be >= 0")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if int(self.n_collisions) != self.n_collisions or self.n_collisions < 1:
            raise ValueError("n_collisions must be a positive integer")
        if not self.reservoirs:
            raise ValueError("at least one reservoir spec is required")
        total = sum(r.weight for r in self.reservoirs)
        if abs(total - 1.0) > WEIGHT_ATOL:
            raise ValueError(f"weights must sum to 1 (got {total!r})")
        if self.mixing not in MIXING_MODES:
            raise ValueError(f"mixing must be one of {MIXING_MODES}")
        if self.reservoir_model not in RESERVOIR_MODELS:
            raise ValueError(f"reservoir_model must be one of {RESERVOIR_MODELS}")
        if self.seed < 0:
            raise ValueError("seed must be an unsigned integer")
        if self.max_dt is not None and not self.max_dt > 0:
            raise ValueError("max_dt must be > 0")

    @property
    def weights(self) -> np.ndarray:
        return np.array([r.weight for r in self.reservoirs])


@dataclass
class CollisionTrace:
    k: np.ndarray
    reservoir_index: np.ndarray
    p_e: np.ndarray
    p_g: np.ndarray
    z: np.ndarray
    steady_state_index: int | None = None
    z_ss: float | None = None
    final_state: DensityMatrix | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.k)


def joint_hamiltonian(sys: SystemParams, cp: CollisionParams, basis: CatBasis) -> Operator:
    """Probe (x) unit Hamiltonian: free probe terms, unit detuning, exchange.

    In the two-level unit model the unit's detuning term is a pure phase
    inside the cat subspace and is dropped.
    """
    d = basis.dim
    hp = kerr_cat_hamiltonian(sys, d).data
    p, m = basis.c_plus.amplitudes, basis.c_minus.amplitudes
    up_down = np.outer(p, m.conj())  # |C+><C-| on the probe
    if cp.reservoir_model == "logical-2level":
        du = 2
        unit_lower = np.array([[0, 0], [1, 0]], dtype=np.complex128)  # |C-><C+|
        h_unit = np.zeros((2, 2))
    else:
        du = d
        unit_lower = np.outer(m, p.conj())
        h_unit = sys.delta_ir * number(d).data
    xchg = np.kron(up_down, unit_lower)
    h = np.kron(hp, np.eye(du)) + np.kron(np.eye(d), h_unit) + cp.eps_x * (xchg + xchg.conj().T)
    return Operator(h, SpaceLayout((d, du)))


def prepare_unit(spec: ReservoirSpec, model: str, basis: CatBasis) -> DensityMatrix:
    if model == "logical-2level":
        v = logical_amplitudes(spec.theta, spec.phi)
        return DensityMatrix(np.outer(v, v.conj()))
    if model == "full-fock":
        return logical_state(basis, spec.theta, spec.phi).dm()
    raise ValueError(f"unknown reservoir model {model!r}")


class _Collider:
    """Fixed one-collision map on raw probe arrays."""

    def __init__(self, H_joint: Operator, sys: SystemParams, cp: CollisionParams):
        d, du = H_joint.dims
        self.d, self.du = d, du
        diss = []
        if cp.probe_dissipation:
            a = annihilation(d).data
            eye = np.eye(du)
            diss = [(sys.kappa1, np.kron(a, eye)), (sys.kappa2, np.kron(a @ a, eye))]
        self.gen = Generator(H_joint.data, diss)
        limit = self.gen.max_dt()
        if cp.max_dt is not None:
            limit = min(limit, cp.max_dt)
        self.n_sub, self.dt = steps_for(cp.tau, limit)
        self.gen.check_step(self.dt)

    def __call__(self, probe: np.ndarray, unit: np.ndarray) -> np.ndarray:
        r = np.kron(probe, unit)
        r = self.gen.propagate(r, 0.0, self.dt, self.n_sub)
        return _ptrace_array(r, (self.d, self.du), 0)


def _check_layouts(probe: DensityMatrix, unit: DensityMatrix, H_joint: Operator):
    if H_joint.dims != (probe.dims[0], unit.dims[0]):
        raise DimensionError(
            f"joint layout {H_joint.dims} does not compose probe {probe.dims} and unit {unit.dims}"
        )


def collide_once(
    probe: DensityMatrix,
    unit: DensityMatrix,
    H_joint: Operator,
    sys: SystemParams,
    cp: CollisionParams,
) -> DensityMatrix:
    _check_layouts(probe, unit, H_joint)
    out = _Collider(H_joint, sys, cp)(probe.data, unit.data)
    return DensityMatrix(out, probe.layout)


def reservoir_schedule(cp: CollisionParams, n: int, start: int = 0) -> np.ndarray:
    """Reservoir index used at each collision ``start+1 .. start+n``.

    Round-robin realizes the weights by largest remainder: collision ``k``
    goes to the spec whose count lags ``k * w_i`` the most (lowest index on
    ties).  Seeded-random draws i.i.d. with probabilities ``w_i`` from a
    generator seeded by ``cp.seed``; a split run sees the same stream.
    """
    w = cp.weights
    total = start + n
    if cp.mixing == "seeded-random":
        rng = np.random.default_rng(cp.seed)
        return rng.choice(len(w), size=total, p=w)[start:]
    counts = np.zeros(len(w))
    out = np.empty(total, dtype=int)
    for k in range(1, total + 1):
        i = int(np.argmax(k * w - counts))
        counts[i] += 1
        out[k - 1] = i
    return out[start:]


def run_collisions(
    probe0: DensityMatrix,
    sys: SystemParams,
    cp: CollisionParams,
    basis: CatBasis,
    *,
    start: int = 0,
    detector: tuple[int, float] | None = None,
) -> CollisionTrace:
    """Iterate the collision map ``cp.n_collisions`` times from ``probe0``.

    ``start`` continues the reservoir schedule of an earlier run.  With a
    ``detector=(window, tol)`` the run stops as soon as the steady-state
    detector fires.  A ``NumericalFailure`` carries the partial trace in
    its ``trace`` attribute.
    """
    if probe0.dims != (basis.dim,):
        raise DimensionError(f"probe dims {probe0.dims} != basis dim {basis.dim}")
    H = joint_hamiltonian(sys, cp, basis)
    collide = _Collider(H, sys, cp)
    units = [prepare_unit(s, cp.reservoir_model, basis).data for s in cp.reservoirs]
    choice = reservoir_schedule(cp, cp.n_collisions, start)
    cp_vec, cm_vec = basis.c_plus.amplitudes, basis.c_minus.amplitudes

    ks, idx, pes, pgs = [], [], [], []
    r = np.array(probe0.data)
    ss = None

    def build(final):
        pe = np.asarray(pes)
        pg = np.asarray(pgs)
        tr = CollisionTrace(np.asarray(ks, dtype=int), np.asarray(idx, dtype=int), pe, pg, pe - pg)
        tr.final_state = final
        if ss is not None:
            tr.steady_state_index, tr.z_ss = ss
        return tr

    for step, i in enumerate(choice, start=start + 1):
        # each collision gets a fresh copy of the prepared unit state
        r = collide(r, units[i].copy())
        # symmetrize every step so a resumed run sees exactly the saved state
        r = 0.5 * (r + r.conj().T)
        pe = float(np.real(np.vdot(cp_vec, r @ cp_vec)))
        pg = float(np.real(np.vdot(cm_vec, r @ cm_vec)))
        ks.append(step)
        idx.append(int(i))
        pes.append(pe)
        pgs.append(pg)
        bad = not np.all(np.isfinite(r)) or abs(pe - pg) > 1 + Z_ATOL
        if not bad:
            bad = (abs(np.trace(r).real - 1.0) > TRACE_FAIL
                   or np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0] < POSITIVITY_FAIL)
        if bad:
            exc = NumericalFailure(f"collision {step}: state left the physical range")
            exc.trace = build(None)
            raise exc
        if detector is not None and len(pes) >= detector[0]:
            w = detector[0]
            hit = detect_steady_state(np.subtract(pes[-w:], pgs[-w:]), w, detector[1])
            if hit is not None:
                ss = (step, hit[1])
                break
    try:
        final = DensityMatrix(r, probe0.layout)
    except ValueError as err:
        exc = NumericalFailure(f"final probe state invalid: {err}")
        exc.trace = build(None)
        raise exc from err
    return build(final)


def detect_steady_state(trace, window: int, tol: float) -> tuple[int, float] | None:
    """First ``k`` whose trailing window satisfies ``max_j |z(k) - z(k-j)| < tol``.

    ``trace`` is a ``CollisionTrace`` (indices taken from ``trace.k``) or a
    plain sequence of z values (indices 1-based).  Returns ``(k, mean z over
    the window)`` or None.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    if isinstance(trace, CollisionTrace):
        z = np.asarray(trace.z, dtype=float)
        ks = np.asarray(trace.k)
    else:
        z = np.asarray(trace, dtype=float)
        ks = np.arange(1, len(z) + 1)
    if len(z) < window:
        return None
    win = np.lib.stride_tricks.sliding_window_view(z, window)
    last = win[:, -1]
    spread = np.maximum(np.abs(last - win.max(axis=1)), np.abs(last - win.min(axis=1)))
    hits = np.nonzero(spread < tol)[0]
    if hits.size == 0:
        return None
    j = int(hits[0])
    return int(ks[j + window - 1]), float(win[j].mean())


def homogenization_target(spec: ReservoirSpec) -> float:
    """Asymptotic ``<C+|rho|C+>`` of a probe homogenized to ``spec``."""
    return math.cos(spec.theta / 2) ** 2
