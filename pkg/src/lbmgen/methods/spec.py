"""Method descriptions: basis, equilibrium value and relaxation rate per entry."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from ..equilibria import EquilibriumSpec, equilibrium_moments
from ..lattice import Stencil
from ..moments import (
    MomentPoly, build_basis, default_monomial_basis, gram_schmidt, is_bulk,
    is_even, is_shear, render_tableau, split_shear_bulk,
)
from ..symexpr import Expr, Rational, sympify, to_str

__all__ = [
    "Space", "RelaxationInfo", "MethodSpec", "InvalidRateError",
    "create_srt", "create_trt", "create_mrt", "create_cumulant",
    "is_conserved", "method_tableau", "maxwellian_cumulant",
]


class Space(enum.Enum):
    MOMENT = "moment"
    CUMULANT = "cumulant"


class InvalidRateError(ValueError):
    pass


def is_conserved(p: MomentPoly) -> bool:
    return p.order < 2


@dataclass(frozen=True)
class RelaxationInfo:
    basis_entry: MomentPoly
    equilibrium: Expr
    rate: Expr

    def __post_init__(self):
        object.__setattr__(self, "rate", sympify(self.rate))
        object.__setattr__(self, "equilibrium", sympify(self.equilibrium))
        r = self.rate
        if isinstance(r, Rational) and not is_conserved(self.basis_entry):
            if not 0 < r.value < 2:
                raise InvalidRateError(
                    f"constant rate {r} for {self.basis_entry} outside (0, 2)")


@dataclass(frozen=True)
class MethodSpec:
    stencil: Stencil
    space: Space
    entries: tuple
    equilibrium_spec: EquilibriumSpec = field(default_factory=EquilibriumSpec)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) != self.stencil.q:
            raise ValueError(f"{self.stencil.name} needs {self.stencil.q} entries")
        if self.space is Space.MOMENT:
            build_basis(self.polys, self.stencil)

    @property
    def polys(self) -> tuple:
        return tuple(e.basis_entry for e in self.entries)

    @property
    def rates(self) -> tuple:
        return tuple(e.rate for e in self.entries)

    @property
    def equilibria(self) -> tuple:
        return tuple(e.equilibrium for e in self.entries)

    @property
    def basis(self):
        return build_basis(self.polys, self.stencil)

    @property
    def compressible(self) -> bool:
        return self.equilibrium_spec.compressible

    def with_rates(self, rates: Sequence) -> "MethodSpec":
        entries = [RelaxationInfo(e.basis_entry, e.equilibrium, r)
                   for e, r in zip(self.entries, rates)]
        return MethodSpec(self.stencil, self.space, tuple(entries), self.equilibrium_spec)

    def substitute_rates(self, bindings: Mapping) -> "MethodSpec":
        return self.with_rates([r.subs(bindings) for r in self.rates])


def _moment_method(s: Stencil, polys, rates, eq_spec) -> MethodSpec:
    eqs = equilibrium_moments(polys, s, eq_spec)
    entries = tuple(RelaxationInfo(p, e, r) for p, e, r in zip(polys, eqs, rates))
    return MethodSpec(s, Space.MOMENT, entries, eq_spec)


def create_srt(s: Stencil, omega, eq_spec: EquilibriumSpec | None = None) -> MethodSpec:
    eq_spec = eq_spec or EquilibriumSpec()
    polys = default_monomial_basis(s)
    return _moment_method(s, polys, [sympify(omega)] * len(polys), eq_spec)


def create_trt(s: Stencil, omega_even, omega_odd, eq_spec: EquilibriumSpec | None = None) -> MethodSpec:
    eq_spec = eq_spec or EquilibriumSpec()
    polys = default_monomial_basis(s)
    rates = [sympify(omega_even) if is_even(p) else sympify(omega_odd) for p in polys]
    return _moment_method(s, polys, rates, eq_spec)


def mrt_groups(polys: Sequence[MomentPoly]) -> list:
    """Group label per polynomial: 'conserved', 'shear', 'bulk' or its order."""
    out = []
    for p in polys:
        if is_conserved(p):
            out.append("conserved")
        elif is_shear(p):
            out.append("shear")
        elif p.order == 2 and is_bulk(p):
            out.append("bulk")
        else:
            out.append(p.order)
    return out


def _group_order(label) -> tuple:
    fixed = {"conserved": 0, "shear": 1, "bulk": 2}
    return (fixed[label], 0) if label in fixed else (3, label)


def create_mrt(s: Stencil, rates: Mapping, weighted: bool = True,
               eq_spec: EquilibriumSpec | None = None) -> MethodSpec:
    """Orthogonal MRT from the split default basis.

    ``rates`` maps 'shear', 'bulk' and every moment order above two to a
    rate; 'conserved' is optional and defaults to 0.  Entries are listed
    conserved first, then shear, bulk and higher orders.
    """
    eq_spec = eq_spec or EquilibriumSpec()
    polys = gram_schmidt(split_shear_bulk(default_monomial_basis(s)), s, weighted)
    labels = mrt_groups(polys)
    keyed = {}
    for k, v in rates.items():
        keyed[int(k) if isinstance(k, str) and k.isdigit() else k] = v
    keyed.setdefault("conserved", 0)
    missing = sorted({str(g) for g in labels if g not in keyed})
    if missing:
        raise KeyError(f"no relaxation rate for moment group(s) {', '.join(missing)}")
    order = sorted(range(len(polys)), key=lambda i: (_group_order(labels[i]), _shear_rank(polys[i]), i))
    polys = [polys[i] for i in order]
    labels = [labels[i] for i in order]
    return _moment_method(s, polys, [sympify(keyed[g]) for g in labels], eq_spec)


def _shear_rank(p: MomentPoly) -> int:
    # pure-square shear moments before the mixed ones
    return 0 if any(max(e) == 2 for e, _ in p.items()) else 1


def maxwellian_cumulant(exps: Sequence[int], cs2: Fraction, u: Sequence[Expr]) -> Expr:
    """Cumulant of the m0-normalized Maxwellian: mean, variance, else zero."""
    from ..symexpr import mul
    n = sum(exps)
    if n == 1:
        return u[list(exps).index(1)]
    if n == 2 and max(exps) == 2:
        return mul(cs2)
    return mul(0)


def create_cumulant(s: Stencil, rates, eq_spec: EquilibriumSpec | None = None,
                    polys: Sequence[MomentPoly] | None = None) -> MethodSpec:
    """Cumulant method; ``rates`` is a group map as for MRT or one rate per entry."""
    from ..equilibria import velocity_symbols, RHO
    from ..symexpr import add, mul
    eq_spec = eq_spec or EquilibriumSpec()
    if polys is None:
        polys = split_shear_bulk(default_monomial_basis(s))
    polys = list(polys)
    if isinstance(rates, Mapping):
        labels = mrt_groups(polys)
        keyed = dict(rates)
        keyed.setdefault("conserved", 0)
        missing = sorted({str(g) for g in labels if g not in keyed})
        if missing:
            raise KeyError(f"no relaxation rate for cumulant group(s) {', '.join(missing)}")
        rate_list = [sympify(keyed[g]) for g in labels]
    else:
        rate_list = [sympify(r) for r in rates]
    u = velocity_symbols(s.d)
    eqs = []
    for p in polys:
        if p.order == 0:
            eqs.append(RHO)
        else:
            eqs.append(add(*[mul(c, maxwellian_cumulant(e, eq_spec.cs2, u)) for e, c in p.items()]))
    entries = tuple(RelaxationInfo(p, e, r) for p, e, r in zip(polys, eqs, rate_list))
    return MethodSpec(s, Space.CUMULANT, entries, eq_spec)


def method_tableau(m: MethodSpec, sep: str | None = None) -> str:
    rows = [(str(e.basis_entry), to_str(e.equilibrium), to_str(e.rate)) for e in m.entries]
    header = ("Moment" if m.space is Space.MOMENT else "Cumulant", "Equilibrium", "Relaxation rate")
    return render_tableau(rows, header, sep)
