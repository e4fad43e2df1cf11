"""Dense operators on truncated Fock spaces and their tensor products.

Subsystem order is global: the probe mode is factor 0, a reservoir unit is
factor 1.  Operators act as their finite-matrix restrictions, so e.g. the
commutator ``[a, a^dag]`` picks up ``1 - dim`` in its last diagonal entry.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-10
POSITIVITY_ATOL = 1e-8


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered subsystem dimensions of a (possibly composite) Hilbert space."""

    factors: tuple[int, ...]

    def __post_init__(self):
        factors = tuple(int(f) for f in self.factors)
        if not factors:
            raise DimensionError("layout needs at least one factor")
        if any(f < 2 for f in factors):
            raise DimensionError(f"every factor must be >= 2, got {factors}")
        object.__setattr__(self, "factors", factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factors))

    def __len__(self):
        return len(self.factors)

    def __add__(self, other: "SpaceLayout") -> "SpaceLayout":
        return SpaceLayout(self.factors + other.factors)


def _layout(layout, dim: int) -> SpaceLayout:
    if layout is None:
        return SpaceLayout((dim,))
    if not isinstance(layout, SpaceLayout):
        layout = SpaceLayout(tuple(layout))
    if layout.total_dim != dim:
        raise DimensionError(
            f"layout {layout.factors} has total dim {layout.total_dim}, matrix has {dim}"
        )
    return layout


class Operator:
    """Immutable dense complex matrix with a subsystem layout."""

    __slots__ = ("data", "layout")

    def __init__(self, data, layout=None):
        arr = np.array(data, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"operator must be a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("operator has non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "layout", _layout(layout, arr.shape[0]))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.factors

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def dag(self) -> "Operator":
        return Operator(self.data.conj().T, self.layout)

    def tr(self) -> complex:
        return complex(np.trace(self.data))

    def is_hermitian(self, atol: float = HERMITIAN_ATOL) -> bool:
        return bool(np.max(np.abs(self.data - self.data.conj().T)) <= atol)

    def _check(self, other: "Operator"):
        if not isinstance(other, Operator):
            return NotImplemented
        if other.layout != self.layout:
            raise DimensionError(f"layout mismatch: {self.dims} vs {other.dims}")
        return None

    def __matmul__(self, other):
        if isinstance(other, np.ndarray) and other.ndim == 1:
            return self.data @ other
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.data @ other.data, self.layout)

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.data + other.data, self.layout)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.data - other.data, self.layout)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator) or not np.isscalar(scalar):
            return NotImplemented
        return Operator(self.data * scalar, self.layout)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return Operator(self.data / scalar, self.layout)

    def __neg__(self):
        return Operator(-self.data, self.layout)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.dims})"


class DensityMatrix(Operator):
    """Hermitian, unit-trace, positive semidefinite operator.

    Construction checks the three properties at the module tolerances and
    raises ``ValueError`` when any fails.
    """

    __slots__ = ()

    def __init__(self, data, layout=None):
        super().__init__(data, layout)
        m = self.data
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > HERMITIAN_ATOL:
            raise ValueError(f"density matrix not Hermitian (max deviation {herm:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix trace {tr.real:.12f} != 1")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -POSITIVITY_ATOL:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")

    def purity(self) -> float:
        return float(np.real(np.sum(self.data * self.data.T)))


def _require_dim(dim) -> int:
    if int(dim) != dim or dim < 2:
        raise DimensionError(f"Fock dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


def annihilation(dim: int) -> Operator:
    """Truncated lowering operator: ``a|n> = sqrt(n)|n-1>``."""
    dim = _require_dim(dim)
    return Operator(np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1))


def creation(dim: int) -> Operator:
    return annihilation(dim).dag()


def number(dim: int) -> Operator:
    dim = _require_dim(dim)
    return Operator(np.diag(np.arange(dim, dtype=float)))


def identity(layout) -> Operator:
    if isinstance(layout, (int, np.integer)):
        layout = SpaceLayout((int(layout),))
    elif not isinstance(layout, SpaceLayout):
        layout = SpaceLayout(tuple(layout))
    return Operator(np.eye(layout.total_dim), layout)


def dagger(op: Operator) -> Operator:
    return op.dag()


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def tensor(*ops) -> Operator:
    """Kronecker product in operand order; accepts varargs or one sequence.

    The product of density matrices is returned as a ``DensityMatrix``.
    """
    if len(ops) == 1 and not isinstance(ops[0], Operator):
        ops = tuple(ops[0])
    if not ops:
        raise DimensionError("tensor needs at least one operand")
    data = ops[0].data
    factors = ops[0].dims
    for op in ops[1:]:
        data = np.kron(data, op.data)
        factors = factors + op.dims
    cls = DensityMatrix if all(isinstance(op, DensityMatrix) for op in ops) else Operator
    return cls(data, SpaceLayout(factors))


def partial_trace(rho: Operator, keep: int) -> Operator:
    """Reduce ``rho`` to the subsystem at index ``keep``.

    A ``DensityMatrix`` input yields a ``DensityMatrix``.
    """
    factors = rho.dims
    n = len(factors)
    if n < 2:
        raise DimensionError("partial trace needs a composite layout")
    if not -n <= keep < n:
        raise IndexError(f"subsystem index {keep} out of range for {n} factors")
    keep %= n
    reduced = _ptrace_array(rho.data, factors, keep)
    cls = DensityMatrix if isinstance(rho, DensityMatrix) else Operator
    return cls(reduced, SpaceLayout((factors[keep],)))


def _ptrace_array(data: np.ndarray, factors: Sequence[int], keep: int) -> np.ndarray:
    n = len(factors)
    t = data.reshape(tuple(factors) * 2)
    letters = string.ascii_letters
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for j in range(n):
        if j != keep:
            cols[j] = rows[j]
    spec = "".join(rows) + "".join(cols) + "->" + rows[keep] + cols[keep]
    return np.einsum(spec, t)


def expectation(rho: Operator, op: Operator) -> complex:
    """``Tr[rho @ op]``."""
    if rho.layout != op.layout:
        raise DimensionError(f"layout mismatch: {rho.dims} vs {op.dims}")
    return complex(np.einsum("ij,ji->", rho.data, op.data))


def ket_to_dm(vec: np.ndarray, layout=None) -> DensityMatrix:
    vec = np.asarray(vec, dtype=np.complex128)
    return DensityMatrix(np.outer(vec, vec.conj()), layout)


def random_hermitian(dim: int, rng: np.random.Generator) -> Operator:
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return Operator((x + x.conj().T) / 2)


def fock_ket(n: int, dim: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise DimensionError(f"Fock index {n} outside truncation {dim}")
    v = np.zeros(dim, dtype=np.complex128)
    v[n] = 1.0
    return v


def as_layout(dims: Iterable[int]) -> SpaceLayout:
    return SpaceLayout(tuple(dims))
