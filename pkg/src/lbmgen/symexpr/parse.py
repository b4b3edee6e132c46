"""Parse infix text (Python syntax subset) into expressions."""

from __future__ import annotations

import ast
from fractions import Fraction
from typing import Mapping

from .core import Expr, Rational, Symbol, log, power, sqrt

__all__ = ["parse_expr", "ParseError"]


class ParseError(ValueError):
    pass


_FUNCS = {"sqrt": sqrt, "log": log, "ln": log}


def parse_expr(text: str, names: Mapping[str, Expr] | None = None) -> Expr:
    """Numbers become exact rationals (``0.02`` is ``1/50``); unknown names
    become symbols.  Only ``+ - * / **``, ``sqrt`` and ``log`` are allowed."""
    names = dict(names or {})
    try:
        tree = ast.parse(str(text).strip(), mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from None

    def go(n):
        if isinstance(n, ast.Expression):
            return go(n.body)
        if isinstance(n, ast.Constant) and isinstance(n.value, (int, float)) and not isinstance(n.value, bool):
            return Rational(Fraction(repr(n.value)) if isinstance(n.value, float) else Fraction(n.value))
        if isinstance(n, ast.Name):
            return names.get(n.id) or Symbol(n.id)
        if isinstance(n, ast.UnaryOp) and isinstance(n.op, (ast.USub, ast.UAdd)):
            v = go(n.operand)
            return -v if isinstance(n.op, ast.USub) else v
        if isinstance(n, ast.BinOp):
            a, b = go(n.left), go(n.right)
            if isinstance(n.op, ast.Add):
                return a + b
            if isinstance(n.op, ast.Sub):
                return a - b
            if isinstance(n.op, ast.Mult):
                return a * b
            if isinstance(n.op, ast.Div):
                return a / b
            if isinstance(n.op, ast.Pow):
                if not (isinstance(b, Rational) and b.value.denominator == 1):
                    raise ParseError(f"only integer exponents allowed in {text!r}")
                return power(a, b.value.numerator)
        if isinstance(n, ast.Call) and isinstance(n.func, ast.Name) and n.func.id in _FUNCS \
                and len(n.args) == 1 and not n.keywords:
            return _FUNCS[n.func.id](go(n.args[0]))
        raise ParseError(f"unsupported syntax in {text!r}")

    return go(tree)
