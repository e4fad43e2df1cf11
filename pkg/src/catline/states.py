"""Coherent and cat states, the logical cat qubit, and Bloch readout.

The logical basis is ``|0bar> = |C+>`` (even cat) and ``|1bar> = |C->``
(odd cat).  Populations are read as ``p_e = <C+|rho|C+>`` and
``p_g = <C-|rho|C->`` so that ``z = p_e - p_g = Tr[rho sigma_z]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStateError, DimensionError, TruncationError
from .operators import DensityMatrix, Operator, SpaceLayout

KET_NORM_ATOL = 1e-10

# Logical Paulis for a two-level reservoir unit stored as (|C+>, |C->).
QUBIT_SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
QUBIT_SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
QUBIT_SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def required_dim(alpha: complex) -> int:
    """Smallest Fock truncation accepted for a state of amplitude ``alpha``."""
    r = abs(alpha)
    return max(4, math.ceil(r * r + 6 * r + 10))


def auto_dim(alpha: complex) -> int:
    """Default truncation, roomier than the minimum.

    At the minimum size the boundary term alone leaves eigen-residuals of a
    few 1e-6 for alpha = 2; this margin brings every residual below 1e-6
    up to alpha ~ 4.5.
    """
    r = abs(alpha)
    return max(8, math.ceil(r * r + 8 * r + 12))


def check_dim(alpha: complex, dim: int) -> None:
    need = required_dim(alpha)
    if dim < need:
        raise TruncationError(
            f"dim={dim} too small for |alpha|={abs(alpha):.4g}; need dim >= {need}"
        )


class Ket:
    """Normalized state vector on a single (or composite) space."""

    __slots__ = ("amplitudes", "layout")

    def __init__(self, amplitudes, layout=None):
        amp = np.array(amplitudes, dtype=np.complex128)
        if amp.ndim != 1:
            raise DimensionError("ket amplitudes must be a 1-d vector")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > KET_NORM_ATOL:
            raise ValueError(f"ket norm {norm:.12f} != 1")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)
        if layout is None:
            layout = SpaceLayout((amp.size,))
        object.__setattr__(self, "layout", layout)

    def __setattr__(self, name, value):
        raise AttributeError("Ket is immutable")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def dm(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()), self.layout)

    def overlap(self, other: "Ket") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)

    def __repr__(self):
        return f"Ket(dim={self.dim})"


def _normalized(vec: np.ndarray) -> Ket:
    return Ket(vec / np.linalg.norm(vec))


def _poisson_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    # alpha^n / sqrt(n!) by recursion; avoids factorial overflow
    c = np.empty(dim, dtype=np.complex128)
    c[0] = 1.0
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def fock(n: int, dim: int) -> Ket:
    if dim < 2:
        raise DimensionError(f"Fock dimension must be >= 2, got {dim}")
    if not 0 <= n < dim:
        raise DimensionError(f"Fock index {n} outside truncation {dim}")
    v = np.zeros(dim, dtype=np.complex128)
    v[n] = 1.0
    return Ket(v)


def coherent(alpha: complex, dim: int) -> Ket:
    """Truncated coherent state, renormalized after truncation."""
    check_dim(alpha, dim)
    if alpha == 0:
        return fock(0, dim)
    return _normalized(_poisson_amplitudes(alpha, dim))


def cat(alpha: float, parity: str, dim: int) -> Ket:
    """Even (``parity="even"``) or odd cat ``(|alpha> +- |-alpha>)``.

    Wrong-parity Fock amplitudes are exactly zero.
    """
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if alpha < 0 or not np.isreal(alpha):
        raise ValueError("cat amplitude must be real and >= 0")
    alpha = float(np.real(alpha))
    check_dim(alpha, dim)
    keep = 0 if parity == "even" else 1
    if alpha == 0:
        if keep:
            raise DegenerateStateError("odd cat is undefined at alpha = 0")
        return fock(0, dim)
    c = _poisson_amplitudes(alpha, dim)
    c[(np.arange(dim) % 2) != keep] = 0.0
    return _normalized(c)


def cat_normalization(alpha: float, parity: str) -> float:
    """Closed-form ``N = 1/sqrt(2(1 +- exp(-2|alpha|^2)))``."""
    sign = 1.0 if parity == "even" else -1.0
    return 1.0 / math.sqrt(2.0 * (1.0 + sign * math.exp(-2.0 * abs(alpha) ** 2)))


def _proj(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.outer(u, v.conj())


@dataclass(frozen=True, eq=False)
class CatBasis:
    """Logical cat qubit embedded in a truncated Fock space."""

    alpha: float
    dim: int
    c_plus: Ket = field(repr=False)
    c_minus: Ket = field(repr=False)
    sigma_x: Operator = field(repr=False)
    sigma_y: Operator = field(repr=False)
    sigma_z: Operator = field(repr=False)

    @property
    def projector(self) -> Operator:
        p, m = self.c_plus.amplitudes, self.c_minus.amplitudes
        return Operator(_proj(p, p) + _proj(m, m))

    def populations(self, rho) -> tuple[float, float]:
        """``(p_e, p_g)`` for a density matrix (or raw array) on the probe."""
        m = rho.data if isinstance(rho, Operator) else np.asarray(rho)
        p, q = self.c_plus.amplitudes, self.c_minus.amplitudes
        return float(np.real(np.vdot(p, m @ p))), float(np.real(np.vdot(q, m @ q)))


def cat_basis(alpha: float, dim: int) -> CatBasis:
    cp = cat(alpha, "even", dim)
    cm = cat(alpha, "odd", dim)
    p, m = cp.amplitudes, cm.amplitudes
    sx = _proj(p, m) + _proj(m, p)
    sy = -1j * _proj(p, m) + 1j * _proj(m, p)
    sz = _proj(p, p) - _proj(m, m)
    return CatBasis(
        alpha=float(alpha),
        dim=int(dim),
        c_plus=cp,
        c_minus=cm,
        sigma_x=Operator(sx),
        sigma_y=Operator(sy),
        sigma_z=Operator(sz),
    )


def logical_amplitudes(theta: float, phi: float) -> np.ndarray:
    """Coefficients on ``(|C+>, |C->)`` of the Bloch state at ``(theta, phi)``."""
    return np.array(
        [math.cos(theta / 2), math.sin(theta / 2) * np.exp(-1j * phi)], dtype=np.complex128
    )


def logical_state(basis: CatBasis, theta: float, phi: float = 0.0) -> Ket:
    """``cos(theta/2)|C+> + sin(theta/2) exp(-i phi)|C->``."""
    c0, c1 = logical_amplitudes(theta, phi)
    v = c0 * basis.c_plus.amplitudes + c1 * basis.c_minus.amplitudes
    return _normalized(v)


def plus_state(basis: CatBasis) -> Ket:
    """Equal superposition ``(|C+> + |C->)/sqrt(2)``; zero logical Z."""
    return _normalized(basis.c_plus.amplitudes + basis.c_minus.amplitudes)


def bloch_vector(rho, basis: CatBasis) -> tuple[float, float, float]:
    """Logical Bloch coordinates of a probe state or a two-level unit state."""
    m = rho.data if isinstance(rho, Operator) else np.asarray(rho)
    n = m.shape[0]
    if n == basis.dim:
        paulis = (basis.sigma_x.data, basis.sigma_y.data, basis.sigma_z.data)
    elif n == 2:
        paulis = (QUBIT_SX, QUBIT_SY, QUBIT_SZ)
    else:
        raise DimensionError(f"state of dim {n} does not match basis dim {basis.dim}")
    x, y, z = (float(np.real(np.einsum("ij,ji->", m, s))) for s in paulis)
    return x, y, z


def fidelity(rho, ket: Ket) -> float:
    """``<ket|rho|ket>`` for a pure reference state."""
    m = rho.data if isinstance(rho, Operator) else np.asarray(rho)
    v = ket.amplitudes
    if m.shape[0] != v.size:
        raise DimensionError(f"state dim {m.shape[0]} != ket dim {v.size}")
    return float(np.real(np.vdot(v, m @ v)))
