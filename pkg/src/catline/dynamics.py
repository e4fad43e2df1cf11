"""Kerr-cat Hamiltonian, GKSL master equation and fixed-step RK4 evolution.

All quantities are dimensionless in units of a scaling frequency (see
``SystemParams.omega_scale``); hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DegenerateStateError, DimensionError, NumericalFailure, StepSizeError
from .operators import (
    DensityMatrix,
    Operator,
    annihilation,
    creation,
    number,
)
from .states import CatBasis, cat_basis, check_dim

DEFAULT_OMEGA = 37.7e9  # rad/s

# RK4 step guard.  dt*|H| <= 0.1 keeps the coherent phase error small;
# dt*|sum k L^dag L| <= 2 stays inside RK4's real-axis stability interval
# (about 2.79) for the fastest decay rate.
H_STEP_LIMIT = 0.1
DISSIPATOR_STEP_LIMIT = 2.0

POSITIVITY_WARN = -1e-6
POSITIVITY_FAIL = -1e-4
TRACE_FAIL = 1e-6


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless Kerr-cat parameters (units of ``omega_scale``)."""

    K: float
    eps2: float
    delta_ar: float = 0.0
    delta_ir: float = 0.0
    kappa1: float = 0.0
    kappa2: float = 0.0
    omega_scale: float = DEFAULT_OMEGA

    def __post_init__(self):
        for name in ("K", "eps2", "delta_ar", "delta_ir", "kappa1", "kappa2", "omega_scale"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.K <= 0:
            raise ValueError(f"K must be > 0, got {self.K}")
        for name in ("eps2", "kappa1", "kappa2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.omega_scale <= 0:
            raise ValueError("omega_scale must be > 0")

    @property
    def alpha(self) -> float:
        """Cat amplitude ``sqrt(eps2 / K)`` pinned by the two-photon drive."""
        return math.sqrt(self.eps2 / self.K)

    @property
    def t1(self) -> float:
        """Single-photon lifetime ``1/kappa1`` in dimensionless time."""
        return math.inf if self.kappa1 == 0 else 1.0 / self.kappa1

    def replace(self, **changes) -> "SystemParams":
        from dataclasses import replace

        return replace(self, **changes)


# Reference stabilization parameter sets, in units of the scaling frequency.
PARAMETER_SETS = {
    "fig2": SystemParams(K=1.12e-6, eps2=2.25e-6, kappa1=1.71e-6, kappa2=3.34e-5,
                         delta_ar=1.00e-4, delta_ir=1.00e-4),
    "fig3": SystemParams(K=1.12e-6, eps2=2.25e-5, kappa1=1.71e-6, kappa2=3.34e-5,
                         delta_ar=1.00e-4, delta_ir=1.00e-4),
    "fig4": SystemParams(K=1.12e-6, eps2=2.25e-6, kappa1=1.71e-6, kappa2=3.34e-6,
                         delta_ar=5.80e-6, delta_ir=5.80e-6),
}

# Full-size collision parameters (alpha^2 ~ 241, long-running).
LONG_RUN_PARAMS = SystemParams(K=1.12e-6, eps2=2.70e-4, kappa1=1.71e-6, kappa2=3.34e-4,
                               delta_ar=5.80e-6, delta_ir=5.80e-6)


@dataclass(frozen=True)
class DriveSchedule:
    """Two-photon drive ``eps2(t)``: constant, or ``eps2_0 (1 - exp(-t^4/tau^4))``."""

    kind: str = "constant"
    eps2_0: float = 0.0
    tau_ramp: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "ramp"):
            raise ValueError(f"drive kind must be 'constant' or 'ramp', got {self.kind!r}")
        if not self.eps2_0 >= 0:
            raise ValueError("eps2_0 must be >= 0")
        if self.kind == "ramp" and not (self.tau_ramp and self.tau_ramp > 0):
            raise ValueError("ramp drive needs tau_ramp > 0")


def drive_value(t: float, schedule: DriveSchedule) -> float:
    if t < 0:
        raise ValueError("drive time must be >= 0")
    if schedule.kind == "constant":
        return schedule.eps2_0
    x = (t / schedule.tau_ramp) ** 4
    return -schedule.eps2_0 * math.expm1(-x)


def kerr_cat_hamiltonian(params: SystemParams, dim: int, eps2_override: float | None = None) -> Operator:
    """``K a^dag^2 a^2 - eps2 (a^dag^2 + a^2) + delta_ar a^dag a``."""
    eps2 = params.eps2 if eps2_override is None else eps2_override
    check_dim(math.sqrt(eps2 / params.K), dim)
    a = annihilation(dim).data
    ad = creation(dim).data
    a2 = a @ a
    ad2 = ad @ ad
    h = params.K * (ad2 @ a2) - eps2 * (ad2 + a2) + params.delta_ar * number(dim).data
    return Operator(h)


def parity_operator(dim: int) -> Operator:
    if dim < 2:
        raise DimensionError(f"dim must be >= 2, got {dim}")
    return Operator(np.diag(np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)))


def probe_dissipators(params: SystemParams, dim: int) -> list[tuple[float, Operator]]:
    a = annihilation(dim)
    return [(params.kappa1, a), (params.kappa2, a @ a)]


def gksl_rhs(rho: Operator, H: Operator, dissipators: Sequence[tuple[float, Operator]] = ()) -> Operator:
    """``-i[H, rho] + sum_j k_j (L rho L^dag - {L^dag L, rho}/2)``."""
    if rho.layout != H.layout:
        raise DimensionError(f"layout mismatch: rho {rho.dims} vs H {H.dims}")
    r = rho.data
    h = H.data
    out = -1j * (h @ r - r @ h)
    for rate, op in dissipators:
        if rate < 0:
            raise ValueError(f"dissipator rate must be >= 0, got {rate}")
        if op.layout != rho.layout:
            raise DimensionError(f"layout mismatch: rho {rho.dims} vs L {op.dims}")
        L = op.data
        Ld = L.conj().T
        LdL = Ld @ L
        out = out + rate * (L @ r @ Ld - 0.5 * (LdL @ r + r @ LdL))
    return Operator(out, rho.layout)


# --- fast generator --------------------------------------------------------

class _LeftMul:
    """``m @ r`` using diagonal bands when ``m`` is banded, else BLAS."""

    def __init__(self, m: np.ndarray, max_bands: int = 5):
        d = m.shape[0]
        self.d = d
        offsets = [k for k in range(-d + 1, d) if np.any(np.diagonal(m, k))]
        if len(offsets) <= max_bands:
            self.bands = [(k, np.diagonal(m, k).copy()[:, None]) for k in offsets]
            self.dense = None
        else:
            self.bands = None
            self.dense = np.ascontiguousarray(m)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return self.dense @ r
        d = self.d
        out = np.zeros_like(r)
        for k, v in self.bands:
            if k >= 0:
                out[: d - k] += v * r[k:]
            else:
                out[-k:] += v * r[: d + k]
        return out


class _Sandwich:
    """Adds ``rate * L r L^dag``; single-band ``L`` uses shifted slices."""

    def __init__(self, rate: float, L: np.ndarray):
        d = L.shape[0]
        self.d = d
        offsets = [k for k in range(-d + 1, d) if np.any(np.diagonal(L, k))]
        if len(offsets) == 1:
            k = offsets[0]
            v = np.diagonal(L, k)
            self.k = k
            self.w = rate * np.outer(v, v.conj())
            self.L = None
        else:
            self.k = None
            self.L = rate * L
            self.Ld = L.conj().T

    def add_to(self, out: np.ndarray, r: np.ndarray) -> None:
        if self.L is not None:
            out += (self.L @ r) @ self.Ld
            return
        k, d = self.k, self.d
        if k >= 0:
            out[: d - k, : d - k] += self.w * r[k:, k:]
        else:
            m = -k
            out[m:, m:] += self.w * r[: d - m, : d - m]


class Generator:
    """Time-dependent GKSL generator ``rho -> L_t[rho]`` on raw arrays.

    ``H(t) = H_static + drive(t) * H_drive``; ``drive`` may be None.
    """

    def __init__(
        self,
        H_static: np.ndarray,
        dissipators: Sequence[tuple[float, np.ndarray]] = (),
        H_drive: np.ndarray | None = None,
        drive: Callable[[float], float] | None = None,
    ):
        d = H_static.shape[0]
        self.dim = d
        ops = [(float(k), np.asarray(L, dtype=np.complex128)) for k, L in dissipators if k > 0]
        damping = np.zeros((d, d), dtype=np.complex128)
        for k, L in ops:
            damping += k * (L.conj().T @ L)
        self.h_norm = float(np.linalg.norm(H_static, 2))
        self.diss_norm = float(np.linalg.norm(damping, 2)) if ops else 0.0
        self._static = _LeftMul(-1j * (H_static - 0.5j * damping))
        self._jumps = [_Sandwich(k, L) for k, L in ops]
        if H_drive is not None and drive is not None:
            self._drive_op = _LeftMul(-1j * H_drive)
            self.drive_norm = float(np.linalg.norm(H_drive, 2))
            self.drive = drive
        else:
            self._drive_op = None
            self.drive_norm = 0.0
            self.drive = None

    def h_bound(self, t: float) -> float:
        """Upper bound on ``|H(t)|_2``."""
        if self.drive is None:
            return self.h_norm
        return self.h_norm + abs(self.drive(t)) * self.drive_norm

    def max_dt(self, h_bound: float | None = None) -> float:
        h = self.h_norm if h_bound is None else h_bound
        lim = math.inf
        if h > 0:
            lim = H_STEP_LIMIT / h
        if self.diss_norm > 0:
            lim = min(lim, DISSIPATOR_STEP_LIMIT / self.diss_norm)
        return lim

    def check_step(self, dt: float, t: float = 0.0) -> None:
        lim = self.max_dt(self.h_bound(t))
        if dt > lim * (1 + 1e-12):
            raise StepSizeError(
                f"dt={dt:.6g} exceeds stability limit {lim:.6g} "
                f"(|H|={self.h_bound(t):.3e}, |damping|={self.diss_norm:.3e}, dim={self.dim})"
            )

    def __call__(self, r: np.ndarray, t: float = 0.0) -> np.ndarray:
        x = self._static(r)
        if self._drive_op is not None:
            x += self.drive(t) * self._drive_op(r)
        x += x.conj().T
        for j in self._jumps:
            j.add_to(x, r)
        return x

    def rk4_step(self, r: np.ndarray, t: float, dt: float) -> np.ndarray:
        h = 0.5 * dt
        k1 = self(r, t)
        k2 = self(r + h * k1, t + h)
        k3 = self(r + h * k2, t + h)
        k4 = self(r + dt * k3, t + dt)
        k2 += k3
        k2 *= 2.0
        k1 += k4
        k1 += k2
        k1 *= dt / 6.0
        return r + k1

    def propagate(self, r: np.ndarray, t0: float, dt: float, n_steps: int) -> np.ndarray:
        for i in range(n_steps):
            r = self.rk4_step(r, t0 + i * dt, dt)
        return r


def steps_for(duration: float, max_dt: float) -> tuple[int, float]:
    """Split ``duration`` into equal steps no longer than ``max_dt``."""
    n = max(1, math.ceil(duration / max_dt - 1e-9))
    return n, duration / n


def _probe_generator(params, dim, schedule, dissipation) -> Generator:
    a = annihilation(dim).data
    h_static = kerr_cat_hamiltonian(params, dim, eps2_override=0.0).data
    h_drive = -(a.conj().T @ a.conj().T + a @ a)
    diss = [(params.kappa1, a), (params.kappa2, a @ a)] if dissipation else []
    return Generator(h_static, diss, H_drive=h_drive, drive=lambda t: drive_value(t, schedule))


def auto_dt(
    params: SystemParams,
    dim: int,
    schedule: DriveSchedule | None = None,
    dissipation: bool = True,
) -> float:
    """Largest step the stability guard accepts over the whole schedule."""
    if schedule is None:
        schedule = DriveSchedule("constant", params.eps2)
    gen = _probe_generator(params, dim, schedule, dissipation)
    return gen.max_dt(gen.h_norm + schedule.eps2_0 * gen.drive_norm)


# --- trajectories ----------------------------------------------------------

@dataclass
class Trajectory:
    times: np.ndarray
    p_e: np.ndarray
    p_g: np.ndarray
    z: np.ndarray
    trace_err: np.ndarray
    min_eig: np.ndarray
    final_state: DensityMatrix | None
    extra: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self):
        return len(self.times)


def _min_eig(r: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0])


def evolve(
    rho0: DensityMatrix,
    params: SystemParams,
    schedule: DriveSchedule | None = None,
    t_final: float = 0.0,
    dt: float = 1.0,
    record_every: int = 1,
    *,
    basis: CatBasis | None = None,
    observables: Mapping[str, Operator] | None = None,
    dissipation: bool = True,
) -> Trajectory:
    """Integrate the master equation with fixed-step RK4 from ``rho0``.

    ``dt`` is shrunk (never grown) so that an integer number of steps lands
    exactly on ``t_final``.  Populations are measured against the cat basis
    at the *target* amplitude ``sqrt(eps2_0/K)`` throughout, also during a
    ramp.  Raises ``StepSizeError`` when ``dt`` breaks the stability guard and
    ``NumericalFailure`` (with ``.trajectory`` holding the records so far) on
    a positivity or trace breach.
    """
    if dt <= 0:
        raise StepSizeError("dt must be > 0")
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if len(rho0.dims) != 1:
        raise DimensionError("evolve acts on the probe mode alone")
    dim = rho0.dims[0]
    if schedule is None:
        schedule = DriveSchedule("constant", params.eps2)
    alpha_t = math.sqrt(schedule.eps2_0 / params.K)
    check_dim(alpha_t, dim)
    if basis is None:
        if alpha_t == 0:
            raise DegenerateStateError("target drive is zero; pass an explicit basis")
        basis = cat_basis(alpha_t, dim)
    elif basis.dim != dim:
        raise DimensionError(f"basis dim {basis.dim} != state dim {dim}")

    gen = _probe_generator(params, dim, schedule, dissipation)

    n_steps, dt = steps_for(t_final, dt) if t_final > 0 else (0, dt)
    # a constant drive needs this single check; a ramp is re-checked per step
    gen.check_step(dt, 0.0)

    obs = {k: v.data for k, v in (observables or {}).items()}
    cp = basis.c_plus.amplitudes
    cm = basis.c_minus.amplitudes
    rec: dict[str, list] = {k: [] for k in ("t", "pe", "pg", "tr", "me")}
    extra: dict[str, list] = {k: [] for k in obs}

    def record(t, r):
        pe = float(np.real(np.vdot(cp, r @ cp)))
        pg = float(np.real(np.vdot(cm, r @ cm)))
        tr = float(abs(np.trace(r) - 1.0))
        me = _min_eig(r)
        rec["t"].append(t)
        rec["pe"].append(pe)
        rec["pg"].append(pg)
        rec["tr"].append(tr)
        rec["me"].append(me)
        for k, o in obs.items():
            extra[k].append(float(np.real(np.einsum("ij,ji->", r, o))))
        if not np.all(np.isfinite(r)) or me < POSITIVITY_FAIL or tr > TRACE_FAIL:
            raise NumericalFailure(
                f"integration failed at t={t:.6g}: min_eig={me:.3e}, trace_err={tr:.3e}"
            )

    def build(final):
        z = np.asarray(rec["pe"]) - np.asarray(rec["pg"])
        return Trajectory(
            times=np.asarray(rec["t"]),
            p_e=np.asarray(rec["pe"]),
            p_g=np.asarray(rec["pg"]),
            z=z,
            trace_err=np.asarray(rec["tr"]),
            min_eig=np.asarray(rec["me"]),
            final_state=final,
            extra={k: np.asarray(v) for k, v in extra.items()},
        )

    r = np.array(rho0.data, dtype=np.complex128)
    try:
        record(0.0, r)
        for i in range(n_steps):
            t = i * dt
            if schedule.kind == "ramp":
                gen.check_step(dt, t + dt)
            r = gen.rk4_step(r, t, dt)
            if (i + 1) % record_every == 0 or i + 1 == n_steps:
                record((i + 1) * dt, r)
    except NumericalFailure as exc:
        exc.trajectory = build(None)
        raise
    try:
        final = DensityMatrix(0.5 * (r + r.conj().T), rho0.layout)
    except ValueError:
        # min_eig between the warn and fail levels: keep the records, drop the state
        final = None
    return build(final)
