"""Conversion between lab units and the dimensionless simulation clock."""

from __future__ import annotations

from .dynamics import DEFAULT_OMEGA

T1_SECONDS = 15.5e-6
COLLISION_SECONDS = 3e-9


def to_dimensionless(seconds: float, omega: float = DEFAULT_OMEGA) -> float:
    return seconds * omega


def to_seconds(t: float, omega: float = DEFAULT_OMEGA) -> float:
    return t / omega


def collisions_per_t1(
    t1_seconds: float = T1_SECONDS,
    collision_seconds: float = COLLISION_SECONDS,
) -> float:
    """Number of collisions fitting into one relaxation time (about 5170)."""
    return t1_seconds / collision_seconds
