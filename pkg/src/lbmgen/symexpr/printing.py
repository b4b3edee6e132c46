"""Deterministic single-line infix rendering."""

from __future__ import annotations

from fractions import Fraction

from .core import Add, Expr, Indexed, Log, Mul, Pow, Rational, Sqrt, Symbol

__all__ = ["to_str"]

_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _PREC_ADD
    if isinstance(e, Mul):
        return _PREC_MUL
    if isinstance(e, Rational):
        if e.value < 0:
            return _PREC_ADD
        return _PREC_MUL if e.value.denominator != 1 else _PREC_ATOM
    if isinstance(e, Pow):
        return _PREC_MUL if e.exp < 0 else _PREC_POW
    return _PREC_ATOM


def _paren(e: Expr, level: int) -> str:
    s = to_str(e)
    return f"({s})" if _prec(e) < level else s


def _term_order(e: Add):
    # constants last, otherwise canonical order
    return [a for a in e.args if not isinstance(a, Rational)] + [
        a for a in e.args if isinstance(a, Rational)]


def _split_neg(t: Expr):
    if isinstance(t, Rational) and t.value < 0:
        return True, Rational(-t.value)
    if isinstance(t, Mul) and isinstance(t.args[0], Rational) and t.args[0].value < 0:
        c = -t.args[0].value
        rest = t.args[1:]
        if c == 1:
            return True, rest[0] if len(rest) == 1 else Mul(rest)
        return True, Mul((Rational(c),) + rest)
    return False, t


def _mul_str(e: Mul) -> str:
    coeff = Fraction(1)
    num, den = [], []
    for a in e.args:
        if isinstance(a, Rational):
            coeff = a.value
        elif isinstance(a, Pow) and a.exp < 0:
            den.append(a.base if a.exp == -1 else Pow(a.base, -a.exp))
        else:
            num.append(a)
    sign = "-" if coeff < 0 else ""
    coeff = abs(coeff)
    parts = [_paren(a, _PREC_MUL + 1 if isinstance(a, Mul) else _PREC_MUL) for a in num]
    if coeff.numerator != 1 or not parts:
        parts.insert(0, str(coeff.numerator))
    s = "*".join(parts)
    dparts = [_paren(d, _PREC_POW) for d in den]
    if coeff.denominator != 1:
        dparts.insert(0, str(coeff.denominator))
    if dparts:
        if len(dparts) == 1:
            s += "/" + dparts[0]
        else:
            s += "/(" + "*".join(dparts) + ")"
    return sign + s


def to_str(e: Expr) -> str:
    if isinstance(e, Rational):
        return _frac(e.value)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Indexed):
        offs = ",".join(str(o) for o in e.offsets)
        return f"{e.name}[{offs}]({e.index})"
    if isinstance(e, Sqrt):
        return f"sqrt({to_str(e.arg)})"
    if isinstance(e, Log):
        return f"log({to_str(e.arg)})"
    if isinstance(e, Pow):
        if e.exp < 0:
            inner = e.base if e.exp == -1 else Pow(e.base, -e.exp)
            return "1/" + _paren(inner, _PREC_POW)
        return f"{_paren(e.base, _PREC_ATOM)}**{e.exp}"
    if isinstance(e, Mul):
        return _mul_str(e)
    if isinstance(e, Add):
        out = []
        for i, t in enumerate(_term_order(e)):
            neg, body = _split_neg(t)
            s = to_str(body)
            if i == 0:
                out.append(("-" + s) if neg else s)
            else:
                out.append((" - " if neg else " + ") + s)
        return "".join(out)
    raise TypeError(f"unknown node {type(e).__name__}")
