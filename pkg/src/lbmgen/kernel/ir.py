"""Stencil IR: fields, relative accesses, statements and kernels."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

from ..symexpr import Assignment, Expr, Indexed, Symbol, free_symbols

__all__ = [
    "Layout", "Field", "FieldAccess", "FlagTest", "Conditional", "Select",
    "SplitInfo", "KernelAST", "StreamingPattern", "statement_reads",
    "statement_writes", "FLUID",
]

FLUID = 1


class Layout(enum.Enum):
    SOA = "soa"   # index dimension slowest
    AOS = "aos"   # index dimension fastest


@dataclass(frozen=True)
class Field:
    """Array with ``spatial_dims`` spatial axes and one index axis."""

    name: str
    spatial_dims: int
    index_size: int = 1
    layout: Layout = Layout.SOA
    dtype: str = "double"   # "double" or "uint" (flag fields)

    def __post_init__(self):
        if self.spatial_dims not in (2, 3):
            raise ValueError("fields are 2D or 3D")
        if self.index_size < 1:
            raise ValueError("index size must be positive")
        if self.dtype not in ("double", "uint"):
            raise ValueError(f"unsupported dtype {self.dtype}")

    def __call__(self, offset=None, index: int = 0) -> Indexed:
        return FieldAccess(self, offset, index)

    def center(self, index: int = 0) -> Indexed:
        return FieldAccess(self, None, index)


def FieldAccess(f: Field, offset=None, index: int = 0) -> Indexed:
    """Relative access ``f[x + offset](index)`` as an opaque expression leaf."""
    offset = tuple(offset) if offset is not None else (0,) * f.spatial_dims
    if len(offset) != f.spatial_dims:
        raise ValueError(f"offset {offset} has wrong dimension for field {f.name}")
    if any(abs(o) > 1 for o in offset):
        raise ValueError(f"offset {offset} leaves the first neighborhood")
    if not 0 <= index < f.index_size:
        raise IndexError(f"index {index} out of range for field {f.name}")
    return Indexed(f.name, offset, index)


@dataclass(frozen=True)
class FlagTest:
    """``(flag access & mask) != 0``."""

    access: Indexed
    mask: int


@dataclass(frozen=True)
class Conditional:
    """Body executed where every test in ``cond`` holds."""

    cond: tuple
    body: tuple


@dataclass(frozen=True)
class Select:
    """``target = cond ? if_true : if_false`` (conditional load)."""

    target: Symbol
    cond: tuple
    if_true: Expr
    if_false: Expr


class StreamingPattern(enum.Enum):
    TWO_ARRAY_PULL = "pull"
    TWO_ARRAY_PUSH = "push"
    COLLIDE_ONLY = "collide-only"
    AA_EVEN = "aa-even"
    AA_ODD = "aa-odd"
    ESO_EVEN = "eso-even"
    ESO_ODD = "eso-odd"

    @property
    def two_array(self) -> bool:
        return self in (StreamingPattern.TWO_ARRAY_PULL, StreamingPattern.TWO_ARRAY_PUSH)

    @property
    def previous(self) -> "StreamingPattern":
        """Pattern of the sweep that produced the data this sweep reads."""
        swap = {
            StreamingPattern.AA_EVEN: StreamingPattern.AA_ODD,
            StreamingPattern.AA_ODD: StreamingPattern.AA_EVEN,
            StreamingPattern.ESO_EVEN: StreamingPattern.ESO_ODD,
            StreamingPattern.ESO_ODD: StreamingPattern.ESO_EVEN,
        }
        return swap.get(self, self)


@dataclass(frozen=True)
class SplitInfo:
    """Inner-loop splitting: ``groups`` are lists of statement lists, the
    first computes the ``buffered`` symbols into line buffers."""

    block: int
    buffered: tuple
    groups: tuple


def statement_writes(st) -> list:
    if isinstance(st, Assignment):
        return [st.target]
    if isinstance(st, Select):
        return [st.target]
    if isinstance(st, Conditional):
        return [t for s in st.body for t in statement_writes(s)]
    raise TypeError(type(st).__name__)


def statement_reads(st) -> set:
    if isinstance(st, Assignment):
        return free_symbols(st.value)
    if isinstance(st, Select):
        out = free_symbols(st.if_true, st.if_false)
        return out | {t.access for t in st.cond}
    if isinstance(st, Conditional):
        out = {t.access for t in st.cond}
        for s in st.body:
            out |= statement_reads(s)
        return out
    raise TypeError(type(st).__name__)


@dataclass(frozen=True)
class KernelAST:
    """A sweep over all interior cells or over the entries of an index list.

    Grid kernels run ``body`` per cell, skipping cells that fail ``guard``.
    Index-list kernels run ``cases[d]`` for entries with link direction d;
    the symbols in ``payload`` are read from the list per entry.
    """

    name: str
    fields: tuple
    body: tuple = ()
    guard: tuple = ()
    kind: str = "grid"
    cases: tuple = ()          # ((direction, statements), ...) for index lists
    payload: tuple = ()        # payload symbols, column order
    split: SplitInfo | None = None
    pattern: StreamingPattern | None = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "guard", tuple(self.guard))
        object.__setattr__(self, "cases", tuple((int(d), tuple(b)) for d, b in self.cases))
        object.__setattr__(self, "payload", tuple(self.payload))
        if self.kind not in ("grid", "index_list"):
            raise ValueError(f"unknown kernel kind {self.kind}")
        dims = {f.spatial_dims for f in self.fields}
        if len(dims) > 1:
            raise ValueError("fields of one kernel must share the spatial dimension")
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise ValueError("duplicate field names")

    @property
    def spatial_dims(self) -> int:
        return self.fields[0].spatial_dims

    def field(self, name: str) -> Field:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    def all_statements(self) -> list:
        out = list(self.body)
        for _, b in self.cases:
            out += list(b)
        if self.split is not None:
            for g in self.split.groups:
                out += list(g)
        return out

    @property
    def parameters(self) -> list:
        """Scalar parameters: free symbols that no statement defines, by name."""
        defined = set(self.payload)
        used = set()
        for st in self.all_statements():
            defined |= {t for t in statement_writes(st) if isinstance(t, Symbol)}
            used |= {s for s in statement_reads(st) if isinstance(s, Symbol)}
        if self.split is not None:
            defined |= set(self.split.buffered)
        return sorted(used - defined, key=lambda s: s.name)

    def accesses(self) -> tuple:
        """``(reads, writes)`` as sets of indexed accesses."""
        reads, writes = set(), set()
        for st in self.all_statements():
            reads |= {s for s in statement_reads(st) if isinstance(s, Indexed)}
            writes |= {t for t in statement_writes(st) if isinstance(t, Indexed)}
        for t in self.guard:
            reads.add(t.access)
        return reads, writes


def check_fields(fields: Sequence[Field]):
    for f in fields:
        if not isinstance(f, Field):
            raise TypeError(f"expected Field, got {type(f).__name__}")
