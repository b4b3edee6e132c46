"""Algebraic rewriting: expand, collect, substitute, differentiate."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from .core import (
    ONE, ZERO, Add, Expr, Indexed, Log, Mul, Pow, Rational, Sqrt, Symbol,
    add, mul, power, sympify,
)

__all__ = [
    "expand", "collect", "substitute", "differentiate", "numer_denom",
    "is_zero", "cancel_equal", "as_poly_terms", "from_poly_terms",
]


# --------------------------------------------------------------------------
# expansion through a sparse polynomial form.  A monomial is a frozenset of
# (atom, exponent) pairs; atoms are symbols, indexed leaves, sqrt/log nodes
# and sums raised to negative powers.

def _mono_mul(a: frozenset, b: frozenset) -> frozenset:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for x, k in b:
        n = d.get(x, 0) + k
        if n:
            d[x] = n
        else:
            del d[x]
    return frozenset(d.items())


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for ma, ca in p.items():
        for mb, cb in q.items():
            m = _mono_mul(ma, mb)
            c = out.get(m, 0) + ca * cb
            if c:
                out[m] = c
            elif m in out:
                del out[m]
    return out


def _poly_pow(p: dict, k: int) -> dict:
    result = {frozenset(): Fraction(1)}
    base = p
    while k:
        if k & 1:
            result = _poly_mul(result, base)
        k >>= 1
        if k:
            base = _poly_mul(base, base)
    return result


def _atom_poly(atom: Expr, k: int = 1) -> dict:
    return {frozenset([(atom, k)]): Fraction(1)}


def _to_poly(e: Expr, memo: dict) -> dict:
    r = memo.get(e)
    if r is not None:
        return r
    if isinstance(e, Rational):
        r = {frozenset(): e.value} if e.value else {}
    elif isinstance(e, (Symbol, Indexed)):
        r = _atom_poly(e)
    elif isinstance(e, Add):
        r = {}
        for t in e.args:
            for m, c in _to_poly(t, memo).items():
                n = r.get(m, 0) + c
                if n:
                    r[m] = n
                else:
                    r.pop(m, None)
    elif isinstance(e, Mul):
        r = {frozenset(): Fraction(1)}
        for f in e.args:
            r = _poly_mul(r, _to_poly(f, memo))
        r = _fold_sqrt(r, memo)
    elif isinstance(e, Pow):
        if e.exp > 0:
            r = _fold_sqrt(_poly_pow(_to_poly(e.base, memo), e.exp), memo)
        else:
            b = _from_poly(_to_poly(e.base, memo))
            if isinstance(b, Add):
                r = _atom_poly(b, e.exp)
            else:
                # monomial base: invert it exactly
                inv = power(b, e.exp)
                r = _to_poly(inv, memo) if not isinstance(inv, Pow) or inv.base != b else _atom_poly(b, e.exp)
    elif isinstance(e, (Sqrt, Log)):
        a = e.rebuild((expand(e.arg),))
        r = _atom_poly(a) if isinstance(a, (Sqrt, Log)) else _to_poly(a, memo)
    else:
        raise TypeError(type(e).__name__)
    memo[e] = r
    return r


def _fold_sqrt(p: dict, memo: dict) -> dict:
    """Rewrite sqrt(a)**k with |k| >= 2 in terms of ``a`` itself."""
    if not any(isinstance(a, Sqrt) and abs(k) >= 2 for m in p for a, k in m):
        return p
    out: dict = {}
    for m, c in p.items():
        term = {frozenset(): c}
        rest = []
        for a, k in m:
            if isinstance(a, Sqrt) and abs(k) >= 2:
                q, r = divmod(abs(k), 2)
                sign = 1 if k > 0 else -1
                term = _poly_mul(term, _to_poly(power(a.arg, sign * q), memo))
                if r:
                    rest.append((a, sign))
            else:
                rest.append((a, k))
        term = _poly_mul(term, {frozenset(rest): Fraction(1)})
        for mm, cc in term.items():
            v = out.get(mm, 0) + cc
            if v:
                out[mm] = v
            else:
                out.pop(mm, None)
    return out


def _from_poly(p: dict) -> Expr:
    terms = []
    for m, c in p.items():
        fs = [power(a, k) for a, k in m]
        terms.append(mul(Rational(c), *fs))
    return add(*terms)


def expand(e) -> Expr:
    """Distribute all products over sums; result is a sum of monomial products."""
    e = sympify(e)
    return _from_poly(_to_poly(e, {}))


def as_poly_terms(e: Expr) -> dict:
    """Expanded form as ``{monomial: coefficient}`` with monomials as frozensets."""
    return dict(_to_poly(sympify(e), {}))


def from_poly_terms(p: dict) -> Expr:
    """Inverse of :func:`as_poly_terms`."""
    return _from_poly(p)


# --------------------------------------------------------------------------

def _factor_exponent(t: Expr, s: Expr) -> int:
    if t == s:
        return 1
    if isinstance(t, Pow) and t.base == s and t.exp > 0:
        return t.exp
    if isinstance(t, Mul):
        for f in t.args:
            k = _factor_exponent(f, s)
            if k:
                return k
    return 0


def collect(e, syms: Sequence[Expr]) -> Expr:
    """Group the terms of ``e`` by the first of ``syms`` they contain as a factor.

    Terms are inspected as they stand; call :func:`expand` first to collect
    from a fully distributed form.
    """
    e = sympify(e)
    terms = e.args if isinstance(e, Add) else (e,)
    groups: dict = {}
    order = []
    rest = []
    for t in terms:
        for s in syms:
            k = _factor_exponent(t, s)
            if k:
                key = (s, k)
                if key not in groups:
                    groups[key] = []
                    order.append(key)
                groups[key].append(mul(t, power(s, -k)))
                break
        else:
            rest.append(t)
    if not groups:
        return e
    parts = [mul(power(s, k), add(*groups[(s, k)])) for s, k in order]
    return add(*parts, *rest)


# --------------------------------------------------------------------------

def substitute(e, bindings: Mapping) -> Expr:
    """Simultaneous replacement of whole nodes; replacements are not revisited."""
    e = sympify(e)
    if not bindings:
        return e
    b = {sympify(k): sympify(v) for k, v in bindings.items()}
    memo: dict = {}

    def go(n: Expr) -> Expr:
        r = b.get(n)
        if r is not None:
            return r
        if not n.args:
            return n
        r = memo.get(n)
        if r is not None:
            return r
        new = [go(a) for a in n.args]
        if all(x is y for x, y in zip(new, n.args)):
            r = n
        else:
            r = n.rebuild(new)
        memo[n] = r
        return r

    return go(e)


# --------------------------------------------------------------------------

def differentiate(e, s: Expr) -> Expr:
    e = sympify(e)
    memo: dict = {}

    def d(n: Expr) -> Expr:
        r = memo.get(n)
        if r is not None:
            return r
        if n == s:
            r = ONE
        elif isinstance(n, (Rational, Symbol, Indexed)):
            r = ZERO
        elif isinstance(n, Add):
            r = add(*[d(a) for a in n.args])
        elif isinstance(n, Mul):
            parts = []
            args = n.args
            for i, a in enumerate(args):
                da = d(a)
                if da != ZERO:
                    parts.append(mul(*args[:i], da, *args[i + 1:]))
            r = add(*parts)
        elif isinstance(n, Pow):
            db = d(n.base)
            r = ZERO if db == ZERO else mul(n.exp, power(n.base, n.exp - 1), db)
        elif isinstance(n, Sqrt):
            da = d(n.arg)
            r = ZERO if da == ZERO else mul(Fraction(1, 2), da, power(n, -1))
        elif isinstance(n, Log):
            da = d(n.arg)
            r = ZERO if da == ZERO else mul(da, power(n.arg, -1))
        else:
            raise TypeError(type(n).__name__)
        memo[n] = r
        return r

    return d(e)


# --------------------------------------------------------------------------

def numer_denom(e) -> tuple:
    """Write ``e`` as a single fraction ``(numerator, denominator)``."""
    e = sympify(e)
    if isinstance(e, Add):
        nds = [numer_denom(a) for a in e.args]
        den = mul(*[d for _, d in nds])
        num_terms = []
        for i, (n, _) in enumerate(nds):
            others = [d for j, (_, d) in enumerate(nds) if j != i]
            num_terms.append(mul(n, *others))
        return add(*num_terms), den
    if isinstance(e, Mul):
        ns, ds = [], []
        for a in e.args:
            n, d = numer_denom(a)
            ns.append(n)
            ds.append(d)
        return mul(*ns), mul(*ds)
    if isinstance(e, Pow):
        n, d = numer_denom(e.base)
        if e.exp > 0:
            return power(n, e.exp), power(d, e.exp)
        return power(d, -e.exp), power(n, -e.exp)
    if isinstance(e, Rational):
        return Rational(Fraction(e.value.numerator)), Rational(Fraction(e.value.denominator))
    return e, ONE


def is_zero(e) -> bool:
    """Exact zero test for rational functions (with sqrt/log treated as atoms)."""
    e = sympify(e)
    if isinstance(e, Rational):
        return e.value == 0
    n, _ = numer_denom(expand(e))
    return expand(n) == ZERO


def cancel_equal(a, b) -> bool:
    return is_zero(sympify(a) - sympify(b))
