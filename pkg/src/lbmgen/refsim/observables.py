"""Macroscopic observables summed over fluid cells in a fixed order."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["density", "velocity", "total_mass", "total_momentum", "kinetic_energy", "entropy"]


def _sum(values: np.ndarray) -> float:
    # flattened C-order walk with compensated summation, independent of blocking
    return math.fsum(np.ravel(values).tolist())


def _select(field: np.ndarray, mask):
    return field if mask is None else field[mask]


def density(f: np.ndarray) -> np.ndarray:
    return f.sum(axis=-1)


def velocity(f: np.ndarray, stencil) -> np.ndarray:
    """Velocity ``(*shape, d)`` of canonical populations ``(*shape, q)``."""
    c = np.asarray(stencil.directions, dtype=float)
    return (f @ c) / density(f)[..., None]


def total_mass(f: np.ndarray, mask=None) -> float:
    return _sum(_select(density(f), mask))


def total_momentum(f: np.ndarray, stencil, mask=None) -> tuple:
    c = np.asarray(stencil.directions, dtype=float)
    j = _select(f @ c, mask)
    return tuple(_sum(j[..., i]) for i in range(stencil.d))


def kinetic_energy(f: np.ndarray, stencil, mask=None) -> float:
    """Sum of rho |u|^2 / 2 over cells."""
    rho = density(f)
    u = velocity(f, stencil)
    e = 0.5 * rho * np.sum(u * u, axis=-1)
    return _sum(_select(e, mask))


def entropy(f: np.ndarray, feq: np.ndarray, mask=None) -> float:
    """Relative discrete entropy ``-sum f ln(f / f_eq)``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.sum(f * np.log(f / feq), axis=-1)
    return _sum(_select(h, mask))
