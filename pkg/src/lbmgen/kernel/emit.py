"""Portable C99 emission of kernel ASTs, plus build-and-load helpers.

Kernel ABI (one function per kernel, all integers are ``long``):

1. one pointer per field in declaration order (``double *`` or
   ``unsigned int *`` for flag fields),
2. the padded size of every spatial axis,
3. for every field, the element stride of each spatial axis and of the
   index axis,
4. index-list kernels only: ``const long *idx`` with rows
   ``(x_0, ..., x_{d-1}, direction)``, then ``const double *payload``
   (one column of n values per payload symbol, if any), then ``long n``,
5. one ``double`` per remaining free symbol, sorted by name.

Grid kernels visit the interior ``1 .. size-2`` of every axis with axis 0
innermost.
"""

from __future__ import annotations

import ctypes
import hashlib
import os
import subprocess
import tempfile
from dataclasses import dataclass

import numpy as np

from ..symexpr import (
    Add, Assignment, Indexed, Log, Mul, Pow, Rational, Sqrt, Symbol,
)
from .ir import Conditional, KernelAST, Select

__all__ = ["EmittedKernelSource", "emit", "emit_driver", "abi_description",
           "find_compiler", "build_shared", "load_kernel", "EmissionError"]


class EmissionError(ValueError):
    pass


@dataclass(frozen=True)
class EmittedKernelSource:
    name: str
    source: str
    abi: str
    parameters: tuple

    def write(self, directory: str) -> list:
        paths = []
        for suffix, text in ((".c", self.source), (".abi.txt", self.abi)):
            p = os.path.join(directory, self.name + suffix)
            with open(p, "w", newline="\n") as fh:
                fh.write(text)
            paths.append(p)
        return paths


def _c_ident(name: str) -> str:
    out = "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in name)
    return out if out and not out[0].isdigit() else "_" + out


class _CPrinter:
    def __init__(self, k: KernelAST, index_list: bool):
        self.k = k
        self.index_list = index_list
        self.locals: dict = {}

    def sym(self, s: Symbol) -> str:
        if s not in self.locals:
            self.locals[s] = _c_ident(s.name)
        return self.locals[s]

    def access(self, a: Indexed) -> str:
        f = a.name
        terms = []
        for i, o in enumerate(a.offsets):
            pos = f"ctr_{i}" if o == 0 else f"(ctr_{i} {'+' if o > 0 else '-'} {abs(o)})"
            terms.append(f"{pos}*_stride_{f}_{i}")
        terms.append(f"{a.index}*_stride_{f}_{len(a.offsets)}")
        return f"_data_{f}[{' + '.join(terms)}]"

    def __call__(self, n) -> str:
        if isinstance(n, Rational):
            v = repr(float(n.value))
            if "." not in v and "e" not in v and "inf" not in v and "nan" not in v:
                v += ".0"
            return f"({v})" if v.startswith("-") else v
        if isinstance(n, Symbol):
            return self.sym(n)
        if isinstance(n, Indexed):
            return self.access(n)
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
            return f"sqrt({self(n.arg)})"
        if isinstance(n, Log):
            return f"log({self(n.arg)})"
        raise EmissionError(f"cannot emit leaf of kind {type(n).__name__}")

    def cond(self, tests) -> str:
        return " && ".join(f"(({self.access(t.access)} & {int(t.mask)}u) != 0u)" for t in tests)

    def statement(self, st, ind: str, out: list):
        if isinstance(st, Assignment):
            rhs = self(st.value)
            if isinstance(st.target, Indexed):
                out.append(f"{ind}{self.access(st.target)} = {rhs};")
            else:
                out.append(f"{ind}const double {self.sym(st.target)} = {rhs};")
        elif isinstance(st, Select):
            out.append(f"{ind}const double {self.sym(st.target)} = ({self.cond(st.cond)}) ? "
                       f"{self(st.if_true)} : {self(st.if_false)};")
        elif isinstance(st, Conditional):
            out.append(f"{ind}if ({self.cond(st.cond)}) {{")
            for inner in st.body:
                self.statement(inner, ind + "    ", out)
            out.append(f"{ind}}}")
        else:
            raise EmissionError(f"unknown statement {type(st).__name__}")


def _signature(k: KernelAST) -> list:
    d = k.spatial_dims
    params = []
    for f in k.fields:
        ctype = "unsigned int" if f.dtype == "uint" else "double"
        params.append(f"{ctype} * restrict _data_{f.name}")
    params += [f"const long _size_{i}" for i in range(d)]
    for f in k.fields:
        params += [f"const long _stride_{f.name}_{i}" for i in range(d + 1)]
    if k.kind == "index_list":
        params.append("const long * restrict _idx")
        if k.payload:
            params.append("const double * restrict _payload")
        params.append("const long _n")
    params += [f"const double {_c_ident(p.name)}" for p in k.parameters]
    return params


def abi_description(k: KernelAST) -> str:
    lines = [f"kernel {k.name}", f"kind {k.kind}", "parameters (in order):"]
    lines += [f"  {p}" for p in _signature(k)]
    if k.kind == "index_list":
        lines.append("idx rows: " + ", ".join([f"x{i}" for i in range(k.spatial_dims)] + ["direction"]))
        if k.payload:
            lines.append("payload columns: " + ", ".join(p.name for p in k.payload))
    lines.append("fields:")
    for f in k.fields:
        lines.append(f"  {f.name}: {f.dtype}, spatial dims {f.spatial_dims}, index size "
                     f"{f.index_size}, layout {f.layout.value}")
    return "\n".join(lines) + "\n"


def emit(k: KernelAST, name: str | None = None) -> EmittedKernelSource:
    """Self-contained C99 translation unit for one kernel."""
    name = _c_ident(name or k.name)
    p = _CPrinter(k, k.kind == "index_list")
    d = k.spatial_dims
    for s in k.parameters:
        p.sym(s)
    L = ["#include <math.h>", ""]
    sig = _signature(k)
    L.append(f"void {name}(" + (",\n" + " " * (len(name) + 6)).join(sig) + ")")
    L.append("{")
    body: list = []
    if k.kind == "grid":
        ind = "    "
        for i in reversed(range(1, d)):
            body.append(f"{ind}for (long ctr_{i} = 1; ctr_{i} < _size_{i} - 1; ++ctr_{i}) {{")
            ind += "    "
        guard = f"{ind}    if (!({p.cond(k.guard)})) continue;" if k.guard else None
        if k.split is None:
            body.append(f"{ind}for (long ctr_0 = 1; ctr_0 < _size_0 - 1; ++ctr_0) {{")
            if guard:
                body.append(guard)
            for st in k.body:
                p.statement(st, ind + "    ", body)
            body.append(f"{ind}}}")
        else:
            b = k.split.block
            bufs = {s: f"_buf_{i}" for i, s in enumerate(k.split.buffered)}
            body.append(f"{ind}for (long blk = 1; blk < _size_0 - 1; blk += {b}) {{")
            inner = ind + "    "
            body.append(f"{inner}const long blk_end = (blk + {b} < _size_0 - 1) ? blk + {b} : _size_0 - 1;")
            for s, bn in bufs.items():
                body.append(f"{inner}double {bn}[{b}];")
            for gi, group in enumerate(k.split.groups):
                body.append(f"{inner}for (long ctr_0 = blk; ctr_0 < blk_end; ++ctr_0) {{")
                if guard:
                    body.append("    " + guard)
                if gi > 0:
                    for s, bn in bufs.items():
                        body.append(f"{inner}    const double {p.sym(s)} = {bn}[ctr_0 - blk];")
                for st in group:
                    p.statement(st, inner + "    ", body)
                if gi == 0:
                    for s, bn in bufs.items():
                        body.append(f"{inner}    {bn}[ctr_0 - blk] = {p.sym(s)};")
                body.append(f"{inner}}}")
            body.append(f"{ind}}}")
        for i in range(1, d):
            ind = ind[:-4]
            body.append(f"{ind}}}")
    else:
        body.append("    for (long e = 0; e < _n; ++e) {")
        for i in range(d):
            body.append(f"        const long ctr_{i} = _idx[e*{d + 1} + {i}];")
        body.append(f"        const long dir = _idx[e*{d + 1} + {d}];")
        for j, s in enumerate(k.payload):
            body.append(f"        const double {p.sym(s)} = _payload[{j}*_n + e];")
        body.append("        switch (dir) {")
        for dval, stmts in k.cases:
            body.append(f"        case {dval}: {{")
            for st in stmts:
                p.statement(st, "            ", body)
            body.append("            break;")
            body.append("        }")
        body.append("        default:")
        body.append("            break;")
        body.append("        }")
        body.append("    }")
    L += body
    L.append("}")
    src = "\n".join(L) + "\n"
    return EmittedKernelSource(name, src, abi_description(k), tuple(x.name for x in k.parameters))


def emit_driver(k: KernelAST, kernel: EmittedKernelSource, shape, seed: int = 1) -> str:
    """Standalone ``main`` that fills every field with a deterministic
    pseudo-random pattern, runs the kernel once and prints a checksum.
    Grid kernels only."""
    if k.kind != "grid":
        raise EmissionError("drivers are generated for grid kernels only")
    cells = 1
    for n in shape:
        cells *= int(n)
    L = ["#include <stdio.h>", "#include <stdlib.h>", "", kernel.source, "int main(void)", "{"]
    L.append(f"    unsigned long long state = {int(seed)}ULL;")
    for f in k.fields:
        ctype = "unsigned int" if f.dtype == "uint" else "double"
        L.append(f"    {ctype} *{f.name} = malloc(sizeof({ctype}) * {cells * f.index_size});")
        L.append(f"    for (long i = 0; i < {cells * f.index_size}; ++i) {{")
        L.append("        state = state * 6364136223846793005ULL + 1442695040888963407ULL;")
        if f.dtype == "uint":
            L.append(f"        {f.name}[i] = 1u;")
        else:
            L.append(f"        {f.name}[i] = 0.05 + 0.1 * (double)(state >> 11) / 9007199254740992.0;")
        L.append("    }")
    args = [f.name for f in k.fields] + [str(int(n)) for n in shape]
    for f in k.fields:
        stride = 1
        strides = []
        for n in shape:
            strides.append(stride)
            stride *= int(n)
        args += [str(s) for s in strides] + [str(stride)]
    args += ["1.0"] * len(k.parameters)
    L.append(f"    {kernel.name}({', '.join(args)});")
    L.append("    double sum = 0.0;")
    for f in k.fields:
        if f.dtype == "double":
            L.append(f"    for (long i = 0; i < {cells * f.index_size}; ++i) sum += {f.name}[i];")
    L.append('    printf("%.17g\\n", sum);')
    for f in k.fields:
        L.append(f"    free({f.name});")
    L.append("    return 0;")
    L.append("}")
    return "\n".join(L) + "\n"


def find_compiler():
    """Path of a C compiler (``$CC``, cc, gcc or clang) or ``None``."""
    import shutil
    for c in (os.environ.get("CC"), "cc", "gcc", "clang"):
        if c and shutil.which(c):
            return shutil.which(c)
    return None


_BUILD_DIR = None


def build_shared(source: str, compiler: str | None = None, workdir: str | None = None) -> str:
    """Compile C99 source into a shared library and return its path."""
    global _BUILD_DIR
    compiler = compiler or find_compiler()
    if compiler is None:
        raise EmissionError("no C compiler available")
    if workdir is None:
        if _BUILD_DIR is None:
            _BUILD_DIR = tempfile.mkdtemp(prefix="lbmgen-build-")
        workdir = _BUILD_DIR
    tag = hashlib.sha256(source.encode()).hexdigest()[:16]
    c_path = os.path.join(workdir, f"k_{tag}.c")
    so_path = os.path.join(workdir, f"k_{tag}.so")
    if not os.path.exists(so_path):
        with open(c_path, "w") as fh:
            fh.write(source)
        cmd = [compiler, "-std=c99", "-O2", "-ffp-contract=off", "-fPIC", "-shared",
               c_path, "-o", so_path, "-lm"]
        res = subprocess.run(cmd, capture_output=True, text=True)
        if res.returncode != 0:
            raise EmissionError(f"compilation failed:\n{res.stderr}")
    return so_path


def load_kernel(k: KernelAST, emitted: EmittedKernelSource | None = None, compiler: str | None = None):
    """Compile the emitted kernel and wrap it with the interpreter's calling
    convention ``fn(arrays, params=None, index_list=None)``."""
    emitted = emitted or emit(k)
    lib = ctypes.CDLL(build_shared(emitted.source, compiler))
    fn = getattr(lib, emitted.name)
    fn.restype = None
    d = k.spatial_dims

    def run(arrays, params=None, index_list=None):
        params = dict(params or {})
        args = []
        keep = []
        first = None
        for f in k.fields:
            a = arrays[f.name]
            want = np.uint32 if f.dtype == "uint" else np.float64
            if a.dtype != want:
                raise TypeError(f"field {f.name} must have dtype {np.dtype(want).name}")
            first = a if first is None else first
            args.append(ctypes.c_void_p(a.ctypes.data))
        args += [ctypes.c_long(n) for n in first.shape[:d]]
        for f in k.fields:
            a = arrays[f.name]
            args += [ctypes.c_long(s // a.itemsize) for s in a.strides]
        if k.kind == "index_list":
            packed = index_list.packed()
            keep.append(packed)
            args.append(ctypes.c_void_p(packed.ctypes.data))
            if k.payload:
                cols = index_list.payload_columns([p.name for p in k.payload])
                keep.append(cols)
                args.append(ctypes.c_void_p(cols.ctypes.data))
            args.append(ctypes.c_long(len(index_list)))
        for p in k.parameters:
            args.append(ctypes.c_double(float(params[p.name])))
        fn(*args)

    run.emitted = emitted
    return run
