"""Moment polynomials and moment bases.

A moment polynomial is a polynomial in the lattice velocity components,
written with the variables ``x, y, z``.  Its value on a velocity set is
``sum_q P(c_q) f_q``; the matrix ``M[k][q] = P_k(c_q)`` maps populations to
moments.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from . import exactla
from .lattice import Stencil
from .symexpr import Expr, Symbol, add, mul, power

__all__ = [
    "MomentPoly", "MomentBasis", "SingularBasisError", "VARIABLES",
    "discrete_moment", "reduce_aliasing", "default_monomial_basis",
    "split_shear_bulk", "gram_schmidt", "build_basis", "moment_sort_key",
    "is_even", "is_shear", "is_bulk", "render_tableau",
]

VARIABLES = ("x", "y", "z")


class SingularBasisError(exactla.SingularMatrixError):
    pass


class MomentPoly:
    """Immutable sparse polynomial: ``{exponent tuple: Fraction}``."""

    __slots__ = ("_terms", "d", "_hash")

    def __init__(self, terms: Mapping, d: int | None = None):
        clean = {}
        for e, c in terms.items():
            c = Fraction(c)
            if c:
                e = tuple(int(k) for k in e)
                if any(k < 0 for k in e):
                    raise ValueError("negative exponent in moment polynomial")
                clean[e] = clean.get(e, 0) + c
                if not clean[e]:
                    del clean[e]
        if d is None:
            ds = {len(e) for e in terms}
            if len(ds) != 1:
                raise ValueError("cannot infer dimension")
            d = ds.pop()
        if any(len(e) != d for e in clean):
            raise ValueError("inconsistent exponent lengths")
        self._terms = dict(sorted(clean.items()))
        self.d = d
        self._hash = hash((d, tuple(self._terms.items())))

    @classmethod
    def monomial(cls, exps, coeff=1) -> "MomentPoly":
        return cls({tuple(exps): coeff}, len(exps))

    @classmethod
    def constant(cls, d: int, value=1) -> "MomentPoly":
        return cls({(0,) * d: value}, d)

    @classmethod
    def parse(cls, text: str, d: int) -> "MomentPoly":
        """Read e.g. ``"3*x**2 + 3*y**2 - 2"`` (the notation produced by ``str``)."""
        from .symexpr.parse import parse_expr
        e = parse_expr(text, {v: Symbol(v) for v in VARIABLES[:d]})
        return cls.from_expr(e, d)

    @classmethod
    def from_expr(cls, e: Expr, d: int) -> "MomentPoly":
        from .symexpr import as_poly_terms
        var = [Symbol(v) for v in VARIABLES[:d]]
        out = {}
        for mono, c in as_poly_terms(e).items():
            exps = [0] * d
            for atom, k in mono:
                if atom not in var or k < 0:
                    raise ValueError(f"not a polynomial in {VARIABLES[:d]}: {e}")
                exps[var.index(atom)] = k
            out[tuple(exps)] = out.get(tuple(exps), 0) + c
        return cls(out, d)

    # container protocol ------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        return isinstance(other, MomentPoly) and self.d == other.d and self._terms == other._terms

    def __hash__(self):
        return self._hash

    @property
    def order(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    # arithmetic ---------------------------------------------------------
    def __add__(self, other: "MomentPoly") -> "MomentPoly":
        t = dict(self._terms)
        for e, c in other._terms.items():
            t[e] = t.get(e, 0) + c
        return MomentPoly(t, self.d)

    def __neg__(self):
        return MomentPoly({e: -c for e, c in self._terms.items()}, self.d)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, MomentPoly):
            t: dict = {}
            for (e1, c1), (e2, c2) in itertools.product(self.items(), other.items()):
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
            return MomentPoly(t, self.d)
        other = Fraction(other)
        return MomentPoly({e: c * other for e, c in self._terms.items()}, self.d)

    __rmul__ = __mul__

    def evaluate(self, c: Sequence[int]) -> Fraction:
        total = Fraction(0)
        for e, k in self._terms.items():
            v = k
            for ci, ei in zip(c, e):
                v *= ci ** ei
            total += v
        return total

    def to_expr(self, variables: Sequence[Expr] | None = None) -> Expr:
        var = variables or [Symbol(v) for v in VARIABLES[:self.d]]
        return add(*[mul(c, *[power(x, k) for x, k in zip(var, e)]) for e, c in self._terms.items()])

    # printing -----------------------------------------------------------
    def display_terms(self) -> list:
        """Terms ordered by total degree then exponents, both descending."""
        return sorted(self._terms.items(), key=lambda t: (-sum(t[0]), tuple(-k for k in t[0])))

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for i, (e, c) in enumerate(self.display_terms()):
            mono = "*".join(
                VARIABLES[j] if k == 1 else f"{VARIABLES[j]}**{k}"
                for j, k in enumerate(e) if k)
            mag = abs(c)
            if not mono:
                body = _frac_str(mag)
            elif mag == 1:
                body = mono
            elif mag.denominator == 1:
                body = f"{mag.numerator}*{mono}"
            else:
                body = f"{mag.numerator}*{mono}/{mag.denominator}" if mag.numerator != 1 else f"{mono}/{mag.denominator}"
            if i == 0:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append((" - " if c < 0 else " + ") + body)
        return "".join(parts)

    def __repr__(self):
        return f"MomentPoly({self})"


def _frac_str(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def moment_sort_key(p: MomentPoly):
    """Order, number of variables involved, length of the printed form, printed form."""
    nvars = sum(1 for j in range(p.d) if any(e[j] for e in p._terms))
    s = str(p)
    return (p.order, nvars, len(s), s)


def is_even(p: MomentPoly) -> bool:
    """True when every term has even total degree (parity classification)."""
    return all(sum(e) % 2 == 0 for e in p._terms)


def _second_order_pure(d: int):
    sq = [tuple(2 if j == i else 0 for j in range(d)) for i in range(d)]
    mixed = [tuple(1 if j in (a, b) else 0 for j in range(d))
             for a, b in itertools.combinations(range(d), 2)]
    return sq, mixed


def is_bulk(p: MomentPoly) -> bool:
    """x**2 + y**2 (+ z**2), possibly with a constant offset, up to scale."""
    sq, _ = _second_order_pure(p.d)
    coeffs = [p._terms.get(e, 0) for e in sq]
    rest = {e for e in p._terms if e not in sq and sum(e) != 0}
    return not rest and coeffs[0] != 0 and all(c == coeffs[0] for c in coeffs)


def is_shear(p: MomentPoly) -> bool:
    """Traceless second-order polynomials (e.g. x**2 - y**2, x*y)."""
    if p.order != 2:
        return False
    sq, mixed = _second_order_pure(p.d)
    if any(e not in sq and e not in mixed for e in p._terms):
        return False
    return sum(p._terms.get(e, 0) for e in sq) == 0


# ---------------------------------------------------------------------------

def discrete_moment(p: MomentPoly, s: Stencil, values: Sequence) -> Expr:
    if len(values) != s.q:
        raise ValueError(f"expected {s.q} values, got {len(values)}")
    return add(*[mul(p.evaluate(c), v) for c, v in zip(s.directions, values)])


def reduce_aliasing(p: MomentPoly) -> MomentPoly:
    def red(k):
        return 0 if k == 0 else (1 if k % 2 else 2)
    t: dict = {}
    for e, c in p.items():
        r = tuple(red(k) for k in e)
        t[r] = t.get(r, 0) + c
    return MomentPoly(t, p.d)


def _row(p: MomentPoly, s: Stencil) -> tuple:
    return tuple(p.evaluate(c) for c in s.directions)


def default_monomial_basis(s: Stencil) -> list:
    """q monomial (or grouped monomial-sum) polynomials with an invertible matrix.

    Candidates are all monomials with exponents in {0, 1, 2}; those with a
    zero row are dropped, and candidates sharing the same row are grouped,
    keeping the sum of the lowest-degree members of each group.
    """
    cands = [MomentPoly.monomial(e) for e in itertools.product(range(3), repeat=s.d)]
    cands.sort(key=moment_sort_key)
    groups: dict = {}
    for p in cands:
        r = _row(p, s)
        if any(r):
            groups.setdefault(r, []).append(p)
    out = []
    for members in groups.values():
        low = min(m.order for m in members)
        keep = [m for m in members if m.order == low]
        total = keep[0]
        for m in keep[1:]:
            total = total + m
        out.append(total)
    out.sort(key=moment_sort_key)
    if len(out) != s.q or exactla.rank([_row(p, s) for p in out]) != s.q:
        raise SingularBasisError(f"default basis construction failed for {s.name}")
    return out


def split_shear_bulk(polys: Sequence[MomentPoly]) -> list:
    """Replace the pure second-order monomials by bulk and shear combinations.

    The bulk moment takes the place of x**2, the shear moments follow it in
    place of the remaining squares, and the mixed monomials are kept.
    """
    polys = list(polys)
    if not polys:
        raise ValueError("empty moment list")
    d = polys[0].d
    sq, _ = _second_order_pure(d)
    sq_polys = [MomentPoly.monomial(e) for e in sq]
    idx = []
    for p in sq_polys:
        try:
            idx.append(polys.index(p))
        except ValueError:
            raise ValueError(f"required moment {p} not present") from None
    bulk = sq_polys[0]
    for p in sq_polys[1:]:
        bulk = bulk + p
    shear = [sq_polys[i] - sq_polys[i + 1] for i in range(d - 1)]
    replacement = [bulk] + shear
    out = list(polys)
    for slot, new in zip(sorted(idx), replacement):
        out[slot] = new
    return out


def _inner(a: MomentPoly, b: MomentPoly, s: Stencil, weighted: bool) -> Fraction:
    w = s.weights if weighted else (1,) * s.q
    return sum((wq * a.evaluate(c) * b.evaluate(c) for wq, c in zip(w, s.directions)), Fraction(0))


def _integer_normalize(p: MomentPoly) -> MomentPoly:
    coeffs = [c for _, c in p.display_terms()]
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in coeffs]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    scale = Fraction(lcm, g)
    if coeffs[0] < 0:
        scale = -scale
    return p * scale


def gram_schmidt(polys: Sequence[MomentPoly], s: Stencil, weighted: bool = True) -> list:
    """Orthogonalize after sorting by order and then lexicographically.

    Each result is rescaled to its smallest integer-coefficient form with a
    positive leading coefficient.
    """
    ordered = sorted(polys, key=moment_sort_key)
    out: list = []
    norms: list = []
    for p in ordered:
        v = p
        for o, n in zip(out, norms):
            f = _inner(p, o, s, weighted) / n
            if f:
                v = v - o * f
        n = _inner(v, v, s, weighted)
        if n == 0:
            raise SingularBasisError(f"moment {p} depends on the preceding moments")
        v = _integer_normalize(v)
        out.append(v)
        norms.append(_inner(v, v, s, weighted))
    return out


@dataclass(frozen=True)
class MomentBasis:
    stencil: Stencil
    polys: tuple
    M: tuple
    M_inverse: tuple

    def moments(self, values: Sequence) -> list:
        return [discrete_moment(p, self.stencil, values) for p in self.polys]


def build_basis(polys: Sequence[MomentPoly], s: Stencil) -> MomentBasis:
    polys = tuple(polys)
    if len(polys) != s.q:
        raise SingularBasisError(f"{s.name} needs {s.q} moments, got {len(polys)}")
    rows = [list(_row(p, s)) for p in polys]
    dep = exactla.dependent_rows(rows)
    if dep:
        names = ", ".join(f"{i}: {polys[i]}" for i in dep)
        raise SingularBasisError(f"singular moment matrix; dependent rows {names}", dep)
    inv = exactla.inverse(rows)
    return MomentBasis(s, polys, tuple(map(tuple, rows)), tuple(map(tuple, inv)))


def render_tableau(rows: Sequence[Sequence[str]], header=("Moment", "Equilibrium", "Relaxation rate"),
                   sep: str | None = None) -> str:
    """Plain aligned columns, or delimiter-separated lines when ``sep`` is given."""
    rows = [tuple(header)] + [tuple(map(str, r)) for r in rows]
    if sep is not None:
        return "\n".join(sep.join(r) for r in rows) + "\n"
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for k, r in enumerate(rows):
        lines.append(" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if k == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
