"""Entropic (KBC-type) choice of the higher-order relaxation rate."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from ..equilibria import EquilibriumSpec
from ..moments import MomentPoly, default_monomial_basis, is_shear, split_shear_bulk
from ..symexpr import (
    DomainError, Expr, Symbol, add, as_poly_terms, expand, mul, power, sympify,
)
from .spec import MethodSpec, _moment_method, is_conserved

__all__ = [
    "OMEGA_S", "OMEGA_H", "NotLinearInRatesError", "NewtonConvergenceError",
    "kbc_partition", "create_kbc", "kbc_higher_rate", "kbc_components",
    "discrete_entropy", "newton_entropy_maximize",
]

OMEGA_S = Symbol("omega_s")
OMEGA_H = Symbol("omega_h")


class NotLinearInRatesError(ValueError):
    pass


class NewtonConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


def kbc_partition(polys: Sequence[MomentPoly]):
    """Example partition: traceless second-order moments are 'shear', every
    other non-conserved moment is 'higher' (bulk included)."""
    shear = frozenset(p for p in polys if is_shear(p))
    higher = frozenset(p for p in polys if not is_conserved(p) and p not in shear)
    return shear, higher


def create_kbc(s, omega_s=OMEGA_S, eq_spec: EquilibriumSpec | None = None,
               partition=None, closed_form: bool = True) -> MethodSpec:
    """Two-rate moment method; with ``closed_form`` the higher rate is the
    entropic expression, otherwise the bare symbol ``omega_h``."""
    eq_spec = eq_spec or EquilibriumSpec()
    polys = split_shear_bulk(default_monomial_basis(s))
    shear, higher = partition or kbc_partition(polys)
    rates = []
    for p in polys:
        if p in shear:
            rates.append(sympify(omega_s))
        elif p in higher:
            rates.append(OMEGA_H)
        elif is_conserved(p):
            rates.append(sympify(0))
        else:
            raise ValueError(f"moment {p} not covered by the partition")
    m = _moment_method(s, polys, rates, eq_spec)
    if closed_form:
        rate = kbc_higher_rate(m, (shear, higher), omega_s)
        m = m.substitute_rates({OMEGA_H: rate})
    return m


def kbc_components(m: MethodSpec, partition, omega_s=OMEGA_S):
    """``(ds, dh, feq)`` per direction from the assembled two-rate rule.

    The post-collision value must read ``f + omega_s*ds + omega_h*dh``.
    """
    from .assemble import assemble_collision_rule
    shear, higher = partition
    omega_s = sympify(omega_s)
    rates = []
    for e in m.entries:
        if e.basis_entry in shear:
            rates.append(OMEGA_S)
        elif e.basis_entry in higher:
            rates.append(OMEGA_H)
        else:
            rates.append(e.rate)
    probe = m.with_rates(rates)
    rule = assemble_collision_rule(probe)
    ds, dh = [], []
    for f, a in zip(rule.pre, rule.mains):
        parts: dict = {}
        for mono, c in as_poly_terms(a.value).items():
            ks = dict(mono).get(OMEGA_S, 0)
            kh = dict(mono).get(OMEGA_H, 0)
            if ks + kh > 1:
                raise NotLinearInRatesError(
                    "update is not linear in the two rates; use newton_entropy_maximize")
            rest = mul(c, *[power(x, k) for x, k in mono if x not in (OMEGA_S, OMEGA_H)])
            key = "s" if ks else ("h" if kh else "0")
            parts.setdefault(key, []).append(rest)
        if expand(add(*parts.get("0", []), mul(-1, f))) != 0:
            raise NotLinearInRatesError("rate-free part of the update differs from f")
        ds.append(add(*parts.get("s", [])))
        dh.append(add(*parts.get("h", [])))
    eq_rule = assemble_collision_rule(m.with_rates([1] * len(m.entries)))
    feq = [expand(a.value) for a in eq_rule.mains]
    return ds, dh, feq


def kbc_higher_rate(m: MethodSpec, partition, omega_s=OMEGA_S) -> Expr:
    """``1 + (1 - omega_s) <ds, dh>_E / <dh, dh>_E`` with ``<a, b>_E = sum a b / feq``."""
    ds, dh, feq = kbc_components(m, partition, omega_s)
    num = add(*[mul(a, b, power(e, -1)) for a, b, e in zip(ds, dh, feq)])
    den = add(*[mul(power(b, 2), power(e, -1)) for b, e in zip(dh, feq)])
    return add(1, mul(add(1, mul(-1, sympify(omega_s))), num, power(den, -1)))


def discrete_entropy(f, feq) -> float:
    f = np.asarray(f, dtype=float)
    feq = np.asarray(feq, dtype=float)
    if np.any(f <= 0) or np.any(feq <= 0):
        raise DomainError("entropy needs positive populations")
    return float(-np.sum(f * np.log(f / feq)))


def newton_entropy_maximize(rule, state, omega_s_value: float, params: Mapping | None = None,
                            omega_h=OMEGA_H, omega_s=OMEGA_S, max_iter: int = 50,
                            tol: float = 1e-12) -> float:
    """Maximize the post-collision entropy over ``omega_h`` by Newton's method.

    ``rule`` is a collision rule with ``omega_h`` (and ``omega_s``) as free
    parameters whose update is at most quadratic in ``omega_h``.
    """
    params = dict(params or {})
    fn = rule.compile()
    names = [p.name for p in rule.parameters]
    state = [np.float64(x) for x in state]

    def post(wh, ws=omega_s_value):
        vals = dict(params)
        vals[omega_h.name] = wh
        vals[omega_s.name] = ws
        missing = [n for n in names if n not in vals]
        if missing:
            raise KeyError(f"missing parameter values {missing}")
        return np.array(fn(*state, *[vals[n] for n in names]), dtype=float)

    feq = post(1.0, 1.0)
    if np.any(feq <= 0):
        raise DomainError("non-positive equilibrium")
    p0, p1, p2 = post(0.0), post(1.0), post(2.0)
    a0 = p0
    a2 = (p2 - 2 * p1 + p0) / 2
    a1 = p1 - p0 - a2
    w = 1.0
    # f equals the equilibrium up to rounding: every omega_h is stationary
    if max(np.abs(a1).max(), np.abs(a2).max()) <= 64 * np.finfo(float).eps * np.abs(feq).max():
        return w
    residual = math.inf
    for _ in range(max_iter):
        fp = a0 + a1 * w + a2 * w * w
        if np.any(fp <= 0):
            raise DomainError(f"negative post-collision population at omega_h={w}")
        d1 = a1 + 2 * a2 * w
        lg = np.log(fp / feq) + 1.0
        terms = d1 * lg
        g = -float(np.sum(terms))
        h = -float(np.sum(2 * a2 * lg + d1 * d1 / fp))
        residual = abs(g)
        # gradient at rounding-noise level: no further progress possible
        if residual <= 64 * np.finfo(float).eps * float(np.sum(np.abs(terms))):
            return w
        if h == 0.0:
            break
        step = g / h
        w -= step
        if abs(step) < tol:
            return w
    raise NewtonConvergenceError(f"Newton iteration did not converge (|dS/domega_h| = {residual:.3e})",
                                 residual)
