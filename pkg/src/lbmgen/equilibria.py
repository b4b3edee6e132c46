"""Equilibrium moments of the Maxwellian and the discrete polynomial equilibrium."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .lattice import Stencil
from .moments import MomentBasis
from .symexpr import (
    ONE, Assignment, Expr, Symbol, add, as_poly_terms, expand, mul, power,
)

__all__ = [
    "EquilibriumSpec", "RHO", "velocity_symbols", "pdf_symbols",
    "post_pdf_symbols", "gaussian_raw_moment", "truncate_velocity_order",
    "continuous_equilibrium_moments", "discrete_equilibrium",
    "equilibrium_moments", "macroscopic_values", "density_velocity_assignments",
]

RHO = Symbol("rho")


def velocity_symbols(d: int) -> tuple:
    return tuple(Symbol(f"u_{i}") for i in range(d))


def pdf_symbols(q: int, name: str = "f") -> tuple:
    return tuple(Symbol(f"{name}_{i}") for i in range(q))


def post_pdf_symbols(q: int) -> tuple:
    return pdf_symbols(q, "fpost")


@dataclass(frozen=True)
class EquilibriumSpec:
    """``continuous=False`` takes the equilibrium moments from the discrete
    polynomial equilibrium instead of the Maxwellian (they coincide on D2Q9
    and D3Q27 but not on D3Q15/D3Q19)."""

    compressible: bool = True
    truncation_order: int = 2
    cs2: Fraction = Fraction(1, 3)
    continuous: bool = True

    def __post_init__(self):
        if self.truncation_order not in (1, 2, 3):
            raise ValueError("truncation_order must be 1, 2 or 3")
        object.__setattr__(self, "cs2", Fraction(self.cs2))

    @property
    def rho0(self) -> Expr:
        return RHO if self.compressible else ONE


def _gauss_1d(n: int, u: Expr, cs2: Fraction) -> Expr:
    m = [mul(1), u]
    for k in range(2, n + 1):
        m.append(add(mul(u, m[k - 1]), mul(k - 1, cs2, m[k - 2])))
    return m[n]


def gaussian_raw_moment(exps: Sequence[int], spec: EquilibriumSpec) -> Expr:
    """Raw moment of the continuous Maxwellian (closed-form Gaussian recursion)."""
    u = velocity_symbols(len(exps))
    return expand(mul(RHO, *[_gauss_1d(e, ui, spec.cs2) for e, ui in zip(exps, u)]))


def truncate_velocity_order(e: Expr, u: Sequence[Expr], order: int) -> Expr:
    """Drop every monomial whose total degree in ``u`` exceeds ``order``."""
    us = set(u)
    keep = []
    for mono, c in as_poly_terms(e).items():
        deg = sum(k for a, k in mono if a in us)
        if deg <= order:
            keep.append(mul(c, *[power(a, k) for a, k in mono]))
    return add(*keep)


def _incompressible(e: Expr, u: Sequence[Expr]) -> Expr:
    us = set(u)
    out = []
    for mono, c in as_poly_terms(e).items():
        if any(a in us for a, _ in mono):
            mono = [(a, k) for a, k in mono if a != RHO]
        out.append(mul(c, *[power(a, k) for a, k in mono]))
    return add(*out)


def _polys(basis) -> list:
    return list(basis.polys) if isinstance(basis, MomentBasis) else list(basis)


def continuous_equilibrium_moments(basis, spec: EquilibriumSpec) -> list:
    """Maxwellian moment per basis polynomial, truncated, optionally incompressible."""
    out = []
    for p in _polys(basis):
        u = velocity_symbols(p.d)
        e = add(*[mul(c, gaussian_raw_moment(exps, spec)) for exps, c in p.items()])
        e = truncate_velocity_order(e, u, spec.truncation_order)
        if not spec.compressible:
            e = _incompressible(e, u)
        out.append(e)
    return out


def discrete_equilibrium(s: Stencil, spec: EquilibriumSpec) -> list:
    """Polynomial equilibrium per direction (Qian-style up to third order)."""
    if spec.truncation_order > 3:
        raise ValueError("discrete equilibrium available up to third order")
    u = velocity_symbols(s.d)
    cs2 = spec.cs2
    rho0 = spec.rho0
    usq = add(*[power(ui, 2) for ui in u])
    out = []
    for c, w in zip(s.directions, s.weights):
        cu = add(*[mul(ci, ui) for ci, ui in zip(c, u)])
        bracket = [mul(1 / cs2, cu)]
        if spec.truncation_order >= 2:
            bracket.append(mul(Fraction(1, 2) / cs2 ** 2, add(power(cu, 2), mul(-cs2, usq))))
        if spec.truncation_order >= 3:
            bracket.append(add(mul(Fraction(1, 6) / cs2 ** 3, power(cu, 3)),
                               mul(Fraction(-1, 2) / cs2 ** 2, cu, usq)))
        out.append(expand(add(mul(w, RHO), mul(w, rho0, add(*bracket)))))
    return out


def equilibrium_moments(basis, s: Stencil, spec: EquilibriumSpec) -> list:
    """Equilibrium moment vector according to ``spec.continuous``."""
    polys = _polys(basis)
    if spec.continuous:
        return continuous_equilibrium_moments(polys, spec)
    feq = discrete_equilibrium(s, spec)
    return [expand(add(*[mul(p.evaluate(c), f) for c, f in zip(s.directions, feq)])) for p in polys]


def macroscopic_values(s: Stencil, spec: EquilibriumSpec, f: Sequence[Expr] | None = None):
    """``(rho, [u_i])`` as expressions in the populations."""
    f = f or pdf_symbols(s.q)
    rho = add(*f)
    u = []
    for i in range(s.d):
        mom = add(*[mul(c[i], fq) for c, fq in zip(s.directions, f)])
        u.append(mul(mom, power(rho, -1)) if spec.compressible else mom)
    return rho, u


def density_velocity_assignments(s: Stencil, spec: EquilibriumSpec,
                                 f: Sequence[Expr] | None = None) -> list:
    """Density and velocity as subexpressions that share partial sums.

    ``vel_i`` sums the populations with ``c_i = +1`` not already taken by a
    previous ``vel_j``; the density adds the rest, and each velocity only
    adds the missing positive terms and subtracts the negative ones.
    """
    f = list(f or pdf_symbols(s.q))
    taken: set = set()
    partial = []
    out = []
    for i in range(s.d):
        idx = [q for q, c in enumerate(s.directions) if c[i] == 1 and q not in taken]
        taken |= set(idx)
        sym = Symbol(f"vel{i}Term")
        partial.append((sym, set(idx)))
        out.append(Assignment(sym, add(*[f[q] for q in idx])))
    rest = [f[q] for q in range(s.q) if q not in taken]
    out.append(Assignment(RHO, add(*[p for p, _ in partial], *rest)))
    u = velocity_symbols(s.d)
    for i in range(s.d):
        sym, own = partial[i]
        plus = [f[q] for q, c in enumerate(s.directions) if c[i] == 1 and q not in own]
        minus = [mul(-1, f[q]) for q, c in enumerate(s.directions) if c[i] == -1]
        mom = add(sym, *plus, *minus)
        out.append(Assignment(u[i], mul(mom, power(RHO, -1)) if spec.compressible else mom))
    return out
