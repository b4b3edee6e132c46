"""Vectorized numpy execution of kernel ASTs.

A kernel is translated once into Python source operating on array slices
(one slice per relative offset), following the same statement list,
sub-loop structure and blocking that the C emitter prints.

Arrays are passed by field name with logical shape ``(*spatial, index)``
including the ghost layer; flag fields hold unsigned integers.
"""

from __future__ import annotations

import keyword

import numpy as np

from ..symexpr import Assignment, Indexed, PythonPrinter, Symbol, free_symbols
from .ir import Conditional, KernelAST, Select

__all__ = ["compile_kernel", "run_kernel"]


class _Names:
    def __init__(self):
        self.map: dict = {}

    def __call__(self, sym: Symbol) -> str:
        if sym not in self.map:
            base = sym.name if sym.name.isidentifier() and not keyword.iskeyword(sym.name) else "s"
            self.map[sym] = f"v_{base}_{len(self.map)}"
        return self.map[sym]


def _off_name(axis: int, o: int) -> str:
    return f"s{axis}{'mzp'[o + 1]}"


class _Gen:
    def __init__(self, k: KernelAST, index_list: bool):
        self.k = k
        self.names = _Names()
        self.index_list = index_list
        self.lines: list = []

    def access(self, a: Indexed) -> str:
        parts = [_off_name(i, o) for i, o in enumerate(a.offsets)]
        return f"a_{a.name}[{', '.join(parts)}, {a.index}]"

    def expr(self, e) -> str:
        leaves = {}
        for x in free_symbols(e):
            leaves[x] = self.access(x) if isinstance(x, Indexed) else self.names(x)
        return PythonPrinter(leaves)(e)

    def cond(self, tests) -> str:
        return " & ".join(f"((a_{t.access.name}[{', '.join(_off_name(i, o) for i, o in enumerate(t.access.offsets))}, "
                          f"{t.access.index}] & {int(t.mask)}) != 0)" for t in tests)

    def emit(self, ind: str, st, mask: str | None):
        if isinstance(st, Assignment):
            if isinstance(st.target, Indexed):
                value = self.expr(st.value)
                if mask is None:
                    if self.index_list:
                        self.lines.append(f"{ind}{self.access(st.target)} = {value}")
                    else:
                        self.lines.append(f"{ind}{self.access(st.target)}[...] = {value}")
                elif self.index_list:
                    self.lines.append(f"{ind}_m = {mask}")
                    self.lines.append(f"{ind}_v = np.broadcast_to({value}, _m.shape)")
                    parts = ", ".join(f"{_off_name(i, o)}[_m]" for i, o in enumerate(st.target.offsets))
                    self.lines.append(f"{ind}a_{st.target.name}[{parts}, {st.target.index}] = _v[_m]")
                else:
                    self.lines.append(f"{ind}np.copyto({self.access(st.target)}, {value}, where={mask})")
            else:
                value = self.expr(st.value)
                if isinstance(st.value, Indexed):
                    value += ".copy()"
                self.lines.append(f"{ind}{self.names(st.target)} = {value}")
        elif isinstance(st, Select):
            self.lines.append(f"{ind}{self.names(st.target)} = np.where({self.cond(st.cond)}, "
                              f"{self.expr(st.if_true)}, {self.expr(st.if_false)})")
        elif isinstance(st, Conditional):
            m = self.cond(st.cond)
            full = f"({m}) & _guard" if mask is not None else m
            self.lines.append(f"{ind}_cm = {full}")
            for inner in st.body:
                if not (isinstance(inner, Assignment) and isinstance(inner.target, Indexed)):
                    raise TypeError("conditional bodies may only write field accesses")
                self.emit(ind, inner, "_cm")
        else:
            raise TypeError(type(st).__name__)


def _grid_source(k: KernelAST) -> str:
    g = _Gen(k, False)
    d = k.spatial_dims
    L = g.lines
    L.append("def _sweep(A, P, IL=None):")
    for f in k.fields:
        L.append(f"    a_{f.name} = A[{f.name!r}]")
    first = k.fields[0].name
    for i in range(d):
        L.append(f"    n{i} = a_{first}.shape[{i}]")
    for p in k.parameters:
        L.append(f"    {g.names(p)} = P[{p.name!r}]")
    for i in range(1, d):
        for o in (-1, 0, 1):
            L.append(f"    {_off_name(i, o)} = slice({1 + o}, n{i} - 1 + {o})")
    block = k.split.block if k.split is not None else None
    step = str(block) if block else "max(n0 - 2, 1)"
    L.append(f"    for lo in range(1, n0 - 1, {step}):")
    L.append(f"        hi = min(lo + {step}, n0 - 1)")
    for o in (-1, 0, 1):
        L.append(f"        {_off_name(0, o)} = slice(lo + {o}, hi + {o})")
    ind = "        "
    mask = None
    if k.guard:
        L.append(f"{ind}_guard = {g.cond(k.guard)}")
        mask = "_guard"
    if k.split is None:
        for st in k.body:
            g.emit(ind, st, mask)
    else:
        bufs = {b: f"buf_{i}" for i, b in enumerate(k.split.buffered)}
        for gi, group in enumerate(k.split.groups):
            L.append(f"{ind}# sub-loop {gi}")
            if gi > 0:
                for b, name in bufs.items():
                    L.append(f"{ind}{g.names(b)} = {name}")
            for st in group:
                g.emit(ind, st, mask)
            if gi == 0:
                for b, name in bufs.items():
                    L.append(f"{ind}{name} = {g.names(b)}")
    return "\n".join(L)


def _list_source(k: KernelAST) -> str:
    g = _Gen(k, True)
    d = k.spatial_dims
    L = g.lines
    L.append("def _sweep(A, P, IL):")
    for f in k.fields:
        L.append(f"    a_{f.name} = A[{f.name!r}]")
    for p in k.parameters:
        L.append(f"    {g.names(p)} = P[{p.name!r}]")
    L.append("    coords = np.asarray(IL.coords).reshape(-1, %d)" % d)
    L.append("    dirs = np.asarray(IL.dirs)")
    for dval, body in k.cases:
        L.append(f"    sel = np.nonzero(dirs == {dval})[0]")
        L.append("    if len(sel):")
        ind = "        "
        for i in range(d):
            L.append(f"{ind}c{i} = coords[sel, {i}]")
            for o in (-1, 0, 1):
                L.append(f"{ind}{_off_name(i, o)} = c{i} + ({o})")
        for p in k.payload:
            L.append(f"{ind}{g.names(p)} = np.asarray(IL.payload[{p.name!r}], dtype=float)[sel]")
        for st in body:
            g.emit(ind, st, None)
    return "\n".join(L)


def compile_kernel(k: KernelAST):
    """``fn(arrays, params=None, index_list=None)`` executing one sweep."""
    src = _list_source(k) if k.kind == "index_list" else _grid_source(k)
    ns = {"np": np, "_sqrt": np.sqrt, "_log": np.log}
    exec(compile(src, f"<kernel {k.name}>", "exec"), ns)
    sweep = ns["_sweep"]
    names = [p.name for p in k.parameters]

    def run(arrays, params=None, index_list=None):
        params = dict(params or {})
        missing = [n for n in names if n not in params]
        if missing:
            raise KeyError(f"kernel {k.name} needs parameter(s) {', '.join(missing)}")
        if k.kind == "index_list" and index_list is None:
            raise ValueError(f"kernel {k.name} needs an index list")
        with np.errstate(all="ignore"):
            sweep(arrays, params, index_list)

    run.source = src
    run.kernel = k
    return run


def run_kernel(k: KernelAST, arrays, params=None, index_list=None):
    compile_kernel(k)(arrays, params, index_list)
