"""Exact rational linear algebra on lists of lists of Fractions."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

__all__ = ["SingularMatrixError", "as_fractions", "matmul", "identity", "rank",
           "dependent_rows", "inverse"]


class SingularMatrixError(ValueError):
    def __init__(self, msg, rows=()):
        super().__init__(msg)
        self.rows = tuple(rows)


def as_fractions(m) -> list:
    return [[Fraction(x) for x in row] for row in m]


def identity(n: int) -> list:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def matmul(a, b) -> list:
    bt = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt] for row in a]


def _reduce(rows: list, v: list, pivots: list) -> list:
    v = list(v)
    for r, p in zip(rows, pivots):
        if v[p]:
            f = v[p] / r[p]
            v = [x - f * y for x, y in zip(v, r)]
    return v


def dependent_rows(m: Sequence[Sequence]) -> list:
    """Indices of rows that are linear combinations of the rows before them."""
    basis, pivots, dep = [], [], []
    for i, row in enumerate(as_fractions(m)):
        v = _reduce(basis, row, pivots)
        p = next((j for j, x in enumerate(v) if x), None)
        if p is None:
            dep.append(i)
        else:
            basis.append(v)
            pivots.append(p)
    return dep


def rank(m: Sequence[Sequence]) -> int:
    m = list(m)
    return len(m) - len(dependent_rows(m))


def inverse(m: Sequence[Sequence]) -> list:
    """Gauss-Jordan inverse over the rationals."""
    a = as_fractions(m)
    n = len(a)
    if any(len(r) != n for r in a):
        raise ValueError("matrix is not square")
    dep = dependent_rows(a)
    if dep:
        raise SingularMatrixError(f"singular matrix; dependent rows {dep}", dep)
    aug = [row + ident for row, ident in zip(a, identity(n))]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col])
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]
