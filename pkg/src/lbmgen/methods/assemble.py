"""Collision rule assembly (moment and cumulant space)."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..equilibria import (
    RHO, density_velocity_assignments, pdf_symbols, post_pdf_symbols,
    velocity_symbols,
)
from ..lattice import Stencil
from ..moments import build_basis
from .. import exactla
from ..symexpr import (
    Assignment, Expr, Rational, Symbol, add, compile_assignments, count_flops,
    free_symbols, inline_all, mul, power, topological_sort,
)
from .cumulants import cumulant_from_lower, downward_closure, normalized_moment_from_lower
from .spec import MethodSpec, Space, is_conserved, maxwellian_cumulant

__all__ = ["CollisionRule", "assemble_collision_rule", "hoist_rates", "cumulant_roundtrip_rule"]


@dataclass(frozen=True)
class CollisionRule:
    """Subexpressions plus one main assignment per direction.

    ``rate_symbols`` holds every symbol that plays the role of a relaxation
    rate, including subexpression symbols computing adaptive rates.
    """

    stencil: Stencil
    subexpressions: tuple
    mains: tuple
    pre: tuple
    post: tuple
    velocity: tuple
    density: Symbol = RHO
    rate_symbols: frozenset = frozenset()
    compressible: bool = True
    method: MethodSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "subexpressions", tuple(self.subexpressions))
        object.__setattr__(self, "mains", tuple(self.mains))

    def replace(self, **kw) -> "CollisionRule":
        return dataclasses.replace(self, **kw)

    @property
    def all_assignments(self) -> list:
        return list(self.subexpressions) + list(self.mains)

    def flops(self):
        return count_flops(self.all_assignments)

    def defined(self) -> set:
        return {a.target for a in self.subexpressions}

    @property
    def parameters(self) -> list:
        """Free symbols that are neither populations nor defined here, by name."""
        known = set(self.pre) | self.defined()
        free = set()
        for a in self.all_assignments:
            free |= free_symbols(a.value)
        return sorted((s for s in free - known if isinstance(s, Symbol)), key=lambda s: s.name)

    def inlined_mains(self) -> list:
        return inline_all(self.subexpressions, self.mains)

    def compile(self):
        """``fn(*f, *params) -> tuple(post values)`` with params in name order."""
        order = topological_sort(self.subexpressions)
        return compile_assignments(order + list(self.mains), list(self.pre) + self.parameters,
                                   [a.target for a in self.mains])

    def evaluate(self, f, params=None):
        """Post-collision values for ``f`` of shape (q, ...) and a param mapping."""
        import numpy as np
        params = params or {}
        fn = self.compile()
        args = [np.asarray(x, dtype=float) for x in f]
        for p in self.parameters:
            key = p.name if p.name in params else p
            args.append(np.asarray(params[key], dtype=float))
        return np.array(fn(*args))


def hoist_rates(rates: Sequence[Expr], prefix: str = "omega_eff"):
    """Replace non-trivial rate expressions by symbols; returns (rates, assignments)."""
    assigns = []
    lookup: dict = {}
    out = []
    for r in rates:
        if isinstance(r, (Rational, Symbol)):
            out.append(r)
            continue
        sym = lookup.get(r)
        if sym is None:
            sym = lookup[r] = Symbol(f"{prefix}_{len(lookup)}")
            assigns.append(Assignment(sym, r))
        out.append(sym)
    return out, assigns


def _rate_symbols(rates, assigns) -> frozenset:
    syms = {r for r in rates if isinstance(r, Symbol)}
    syms |= {a.target for a in assigns}
    return frozenset(syms)


def assemble_collision_rule(m: MethodSpec) -> CollisionRule:
    s = m.stencil
    f = pdf_symbols(s.q)
    fpost = post_pdf_symbols(s.q)
    u = velocity_symbols(s.d)
    spec = m.equilibrium_spec
    macro = density_velocity_assignments(s, spec, f)
    rates, rate_assigns = hoist_rates(m.rates)
    if m.space is Space.MOMENT:
        mains, extra = _moment_mains(m, f, rates), []
    else:
        mains, extra = _cumulant_rule(m, f, rates)
    subs = topological_sort(macro + rate_assigns + extra)
    return CollisionRule(
        stencil=s, subexpressions=tuple(subs),
        mains=tuple(Assignment(t, v) for t, v in zip(fpost, mains)),
        pre=f, post=fpost, velocity=u, density=RHO,
        rate_symbols=_rate_symbols(rates, rate_assigns),
        compressible=m.compressible if m.space is Space.MOMENT else True,
        method=m)


def cumulant_roundtrip_rule(m: MethodSpec) -> CollisionRule:
    """Populations -> cumulants -> populations without relaxing anything."""
    if m.space is not Space.CUMULANT:
        raise ValueError("cumulant method required")
    s = m.stencil
    f = pdf_symbols(s.q)
    macro = density_velocity_assignments(s, m.equilibrium_spec, f)
    mains, extra = _cumulant_rule(m, f, [Rational(0)] * s.q)
    return CollisionRule(
        stencil=s, subexpressions=tuple(topological_sort(macro + extra)),
        mains=tuple(Assignment(t, v) for t, v in zip(post_pdf_symbols(s.q), mains)),
        pre=f, post=post_pdf_symbols(s.q), velocity=velocity_symbols(s.d), method=m)


def _moment_mains(m: MethodSpec, f, rates) -> list:
    # f' = f + M^-1 S (m_eq - M f); each relaxed row stays a product rate*(...)
    basis = m.basis
    q = m.stencil.q
    terms = []
    for k in range(q):
        r = rates[k]
        if isinstance(r, Rational) and r.value == 0:
            terms.append(None)
            continue
        mf = add(*[mul(basis.M[k][j], f[j]) for j in range(q)])
        terms.append(mul(r, add(m.entries[k].equilibrium, mul(-1, mf))))
    mains = []
    for i in range(q):
        parts = [f[i]]
        for k in range(q):
            c = basis.M_inverse[i][k]
            if c and terms[k] is not None:
                parts.append(mul(c, terms[k]))
        mains.append(add(*parts))
    return mains


def _name(prefix: str, e: tuple) -> Symbol:
    return Symbol(prefix + "_" + "".join(map(str, e)))


def _cumulant_rule(m: MethodSpec, f, rates):
    """Populations -> raw moments -> cumulants -> relax -> back.

    Every intermediate quantity is a named subexpression.  Basis entries
    are linear combinations of monomial cumulants; when the monomials
    outnumber the entries, extra monomials are kept unrelaxed so the
    combination can be inverted.
    """
    s = m.stencil
    d = s.d
    u = velocity_symbols(d)
    zero = (0,) * d
    polys = m.polys
    monos = sorted({e for p in polys for e, _ in p.items()}, key=lambda e: (sum(e), e))
    rows = [[p.terms.get(e, Fraction(0)) for e in monos] for p in polys]
    relax_rates = list(rates)
    if len(monos) > len(rows):
        for e in monos:
            cand = rows + [[Fraction(int(x == e)) for x in monos]]
            if exactla.rank(cand) > exactla.rank(rows):
                rows = cand
                relax_rates.append(Rational(0))
            if len(rows) == len(monos):
                break
    if exactla.rank(rows) != len(monos):
        raise exactla.SingularMatrixError("cumulant basis is not invertible over its monomials")
    a_inv = exactla.inverse(rows)
    closure = [e for e in downward_closure(monos) if e != zero]

    assigns = []
    mu = {zero: mul(1)}
    for i in range(d):
        mu[tuple(int(j == i) for j in range(d))] = u[i]
    inv_rho = power(RHO, -1)
    for e in closure:
        if e in mu:
            continue
        sym = _name("m", e)
        raw = add(*[mul(_mono_value(e, c), fq) for c, fq in zip(s.directions, f)])
        assigns.append(Assignment(sym, raw))
        mu[e] = mul(sym, inv_rho)

    kappa = {}
    for e in closure:
        if sum(e) == 1:
            kappa[e] = mu[e]
            continue
        sym = _name("kappa", e)
        assigns.append(Assignment(sym, cumulant_from_lower(e, kappa.__getitem__, mu.__getitem__)))
        kappa[e] = sym

    # relax in the (extended) basis, map back to monomial cumulants
    post_basis = []
    for k, row in enumerate(rows):
        pre_val = add(*[mul(c, kappa[e]) for c, e in zip(row, monos) if c and e != zero])
        if k < len(polys):
            p = polys[k]
            if is_conserved(p):
                post_basis.append(pre_val)
                continue
            eq = add(*[mul(c, maxwellian_cumulant(e, m.equilibrium_spec.cs2, u))
                       for e, c in p.items() if e != zero])
        else:
            post_basis.append(pre_val)
            continue
        r = relax_rates[k]
        sym = Symbol(f"kappa_post_b{k}")
        assigns.append(Assignment(sym, add(pre_val, mul(r, add(eq, mul(-1, pre_val))))))
        post_basis.append(sym)
    kappa_post = dict(kappa)
    for j, e in enumerate(monos):
        if e == zero or sum(e) == 1:
            continue
        val = add(*[mul(a_inv[j][k], post_basis[k]) for k in range(len(rows)) if a_inv[j][k]])
        sym = _name("kappa_post", e)
        assigns.append(Assignment(sym, val))
        kappa_post[e] = sym

    mu_post = {zero: mul(1)}
    for i in range(d):
        mu_post[tuple(int(j == i) for j in range(d))] = u[i]
    for e in closure:
        if e in mu_post:
            continue
        sym = _name("mu_post", e)
        assigns.append(Assignment(sym, normalized_moment_from_lower(
            e, kappa_post.__getitem__, mu_post.__getitem__)))
        mu_post[e] = sym

    basis = build_basis(polys, s)
    m_post = []
    for k, p in enumerate(polys):
        val = mul(RHO, add(*[mul(c, mu_post[e]) for e, c in p.items()]))
        sym = Symbol(f"m_post_{k}")
        assigns.append(Assignment(sym, val))
        m_post.append(sym)
    mains = [add(*[mul(basis.M_inverse[i][k], m_post[k]) for k in range(s.q)]) for i in range(s.q)]
    return mains, assigns


def _mono_value(e: tuple, c: tuple) -> int:
    v = 1
    for ci, ei in zip(c, e):
        v *= ci ** ei
    return v
