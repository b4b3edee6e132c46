"""Raw moments <-> cumulants for multivariate discrete distributions.

Cumulants are those of the distribution normalized by its zeroth moment
``m0``; the zeroth cumulant is ``ln m0``.  With ``mu_n = m_n / m0`` the
recursion (Faa di Bruno for the logarithm, peeled along the first
non-zero axis ``i`` of ``n``, ``n' = n - e_i``) is

    kappa_n = mu_n - sum_{k <= n', k != n'} C(n', k) kappa_{k + e_i} mu_{n' - k}

with ``C(n', k) = prod_j binom(n'_j, k_j)``.  Reading the same identity
for ``mu_n`` gives the inverse.
"""

from __future__ import annotations

import itertools
from math import comb
from typing import Callable, Iterable, Mapping

from ..symexpr import Expr, add, log, mul, power

__all__ = [
    "MissingMomentError", "sub_indices", "downward_closure",
    "cumulant_from_lower", "normalized_moment_from_lower",
    "raw_moments_to_cumulants", "cumulants_to_raw_moments",
]


class MissingMomentError(KeyError):
    def __str__(self):
        return f"moment {self.args[0]} required by the cumulant recursion is missing"


def sub_indices(n: tuple) -> Iterable[tuple]:
    return itertools.product(*[range(k + 1) for k in n])


def downward_closure(indices: Iterable[tuple]) -> list:
    out = set()
    for n in indices:
        out.update(sub_indices(n))
    return sorted(out, key=lambda e: (sum(e), e))


def _split(n: tuple):
    i = next(j for j, k in enumerate(n) if k)
    n1 = tuple(k - (j == i) for j, k in enumerate(n))
    return i, n1


def _lower_sum(n: tuple, kappa: Callable, mu: Callable) -> Expr:
    i, n1 = _split(n)
    terms = []
    for k in sub_indices(n1):
        if k == n1:
            continue
        c = 1
        for a, b in zip(n1, k):
            c *= comb(a, b)
        kk = tuple(v + (j == i) for j, v in enumerate(k))
        rest = tuple(a - b for a, b in zip(n1, k))
        terms.append(mul(c, kappa(kk), mu(rest)))
    return add(*terms)


def cumulant_from_lower(n: tuple, kappa: Callable, mu: Callable) -> Expr:
    """``kappa_n`` from ``mu_n`` and lower-order quantities (``n != 0``)."""
    return add(mu(n), mul(-1, _lower_sum(n, kappa, mu)))


def normalized_moment_from_lower(n: tuple, kappa: Callable, mu: Callable) -> Expr:
    """``mu_n`` from ``kappa_n`` and lower-order quantities (``n != 0``)."""
    return add(kappa(n), _lower_sum(n, kappa, mu))


def raw_moments_to_cumulants(raw: Mapping[tuple, Expr], max_order: int | None = None) -> dict:
    """Cumulant expressions for every multi-index in ``raw`` up to ``max_order``."""
    raw = dict(raw)
    if not raw:
        raise MissingMomentError("zeroth moment")
    d = len(next(iter(raw)))
    zero = (0,) * d
    if zero not in raw:
        raise MissingMomentError(zero)
    m0 = raw[zero]
    inv = power(m0, -1)
    mu_memo: dict = {zero: mul(1)}
    kappa_memo: dict = {}

    def mu(n):
        r = mu_memo.get(n)
        if r is None:
            if n not in raw:
                raise MissingMomentError(n)
            r = mu_memo[n] = mul(raw[n], inv)
        return r

    def kappa(n):
        r = kappa_memo.get(n)
        if r is None:
            r = kappa_memo[n] = cumulant_from_lower(n, kappa, mu)
        return r

    out = {zero: log(m0)}
    for n in sorted(raw, key=lambda e: (sum(e), e)):
        if n == zero or (max_order is not None and sum(n) > max_order):
            continue
        out[n] = kappa(n)
    return out


def cumulants_to_raw_moments(cumulants: Mapping[tuple, Expr], m0: Expr) -> dict:
    """Inverse of :func:`raw_moments_to_cumulants`; ``m0`` is passed directly
    so no exponential is needed for the zeroth entry."""
    cumulants = dict(cumulants)
    d = len(next(iter(cumulants)))
    zero = (0,) * d
    mu_memo: dict = {zero: mul(1)}

    def kappa(n):
        if n not in cumulants:
            raise MissingMomentError(n)
        return cumulants[n]

    def mu(n):
        r = mu_memo.get(n)
        if r is None:
            r = mu_memo[n] = normalized_moment_from_lower(n, kappa, mu)
        return r

    out = {zero: m0}
    for n in sorted(cumulants, key=lambda e: (sum(e), e)):
        if n != zero:
            out[n] = mul(m0, mu(n))
    return out
