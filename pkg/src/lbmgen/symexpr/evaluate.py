"""Numeric evaluation: scalar double evaluation and vectorized Python codegen."""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import Add, DomainError, Expr, Indexed, Log, Mul, Pow, Rational, Sqrt, Symbol

__all__ = ["eval_f64", "UnboundSymbolError", "PythonPrinter", "compile_assignments"]


class UnboundSymbolError(KeyError):
    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"unbound symbol {self.name!r}"


def eval_f64(e: Expr, bindings: Mapping | None = None,
             leaf_reader: Callable[[Indexed], float] | None = None) -> float:
    """Evaluate in IEEE double, children strictly left to right."""
    bindings = bindings or {}
    by_name = {}
    for k, v in bindings.items():
        by_name[k.name if isinstance(k, Symbol) else k] = v
    memo: dict = {}

    def ev(n: Expr) -> float:
        r = memo.get(n)
        if r is not None:
            return r
        if isinstance(n, Rational):
            r = float(n.value)
        elif isinstance(n, Symbol):
            if n.name not in by_name:
                raise UnboundSymbolError(n.name)
            r = float(by_name[n.name])
        elif isinstance(n, Indexed):
            if n in bindings:
                r = float(bindings[n])
            elif leaf_reader is None:
                raise UnboundSymbolError(repr(n))
            else:
                r = float(leaf_reader(n))
        elif isinstance(n, Add):
            it = iter(n.args)
            r = ev(next(it))
            for a in it:
                r = r + ev(a)
        elif isinstance(n, Mul):
            it = iter(n.args)
            r = ev(next(it))
            for a in it:
                r = r * ev(a)
        elif isinstance(n, Pow):
            b = ev(n.base)
            if n.exp > 0:
                r = b ** n.exp
            else:
                r = 1.0 / (b ** -n.exp)
        elif isinstance(n, Sqrt):
            a = ev(n.arg)
            if a < 0:
                raise DomainError(f"sqrt of negative value {a}")
            r = math.sqrt(a)
        elif isinstance(n, Log):
            a = ev(n.arg)
            if a <= 0:
                raise DomainError(f"log of non-positive value {a}")
            r = math.log(a)
        else:
            raise TypeError(type(n).__name__)
        memo[n] = r
        return r

    return ev(e)


class PythonPrinter:
    """Render expressions as Python/numpy source.

    ``names`` maps leaves (symbols or indexed accesses) to Python
    identifiers; unmapped symbols render by name.
    """

    def __init__(self, names: Mapping[Expr, str] | None = None):
        self.names = names if names is not None else {}

    def leaf(self, n: Expr) -> str:
        s = self.names.get(n)
        if s is not None:
            return s
        if isinstance(n, Symbol):
            return n.name
        raise KeyError(f"no name for leaf {n!r}")

    def __call__(self, n: Expr) -> str:
        if isinstance(n, Rational):
            return repr(float(n.value))
        if isinstance(n, (Symbol, Indexed)):
            return self.leaf(n)
        if isinstance(n, Add):
            return "(" + " + ".join(self(a) for a in n.args) + ")"
        if isinstance(n, Mul):
            return "(" + "*".join(self(a) for a in n.args) + ")"
        if isinstance(n, Pow):
            b = self(n.base)
            if n.exp > 0:
                return "(" + "*".join([b] * n.exp) + ")"
            return "(1.0/(" + "*".join([b] * -n.exp) + "))"
        if isinstance(n, Sqrt):
            return f"_sqrt({self(n.arg)})"
        if isinstance(n, Log):
            return f"_log({self(n.arg)})"
        raise TypeError(type(n).__name__)


def compile_assignments(assignments: Sequence, inputs: Sequence[Expr],
                        outputs: Sequence[Expr] | None = None):
    """Build ``fn(*input_values) -> tuple(output values)`` from an assignment list.

    Works elementwise on floats or numpy arrays.  Targets may be symbols or
    indexed leaves; ``outputs`` defaults to every target in order.
    """
    names: dict = {}
    counter = [0]

    def ident(leaf):
        if leaf not in names:
            names[leaf] = f"v{counter[0]}"
            counter[0] += 1
        return names[leaf]

    args = [ident(s) for s in inputs]
    printer = PythonPrinter(names)
    lines = [f"def _fn({', '.join(args)}):"]
    for a in assignments:
        rhs = _print_with_leaves(printer, a.value, ident)
        lines.append(f"    {ident(a.target)} = {rhs}")
    outs = list(outputs) if outputs is not None else [a.target for a in assignments]
    lines.append("    return (" + "".join(ident(o) + ", " for o in outs) + ")")
    src = "\n".join(lines)
    ns = {"_sqrt": np.sqrt, "_log": np.log}
    exec(compile(src, "<lbmgen-compiled>", "exec"), ns)
    fn = ns["_fn"]
    fn.source = src
    return fn


def _print_with_leaves(printer: PythonPrinter, e: Expr, ident) -> str:
    from .core import free_symbols
    for leaf in free_symbols(e):
        if leaf not in printer.names:
            raise UnboundSymbolError(repr(leaf))
    return printer(e)
