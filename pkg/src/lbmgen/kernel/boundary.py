"""Link-wise boundary conditions: flag-field, index-list and compiled-in kernels.

A link (x, d) joins a fluid cell x to a flagged neighbor b = x + c_d.  The
boundary step takes the population that the previous sweep stored for
(x, d) and writes the value the next sweep reads as f_dbar at x:

    arr[R_next(x, dbar)] = rule(arr[W_prev(x, d)], d)

with the slot maps of :mod:`lbmgen.kernel.lower`, so a single rule serves
every streaming pattern and both parities of the in-place patterns.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from ..lattice import Stencil
from ..symexpr import Assignment, Expr, Symbol, add, mul, sympify
from .ir import FLUID, Conditional, Field, FlagTest, KernelAST, StreamingPattern
from .lower import CompiledIn, UnsupportedBoundaryError, read_slot, write_slot

__all__ = [
    "BoundarySpec", "NoSlip", "UBB", "user_defined", "BoundaryMode", "IndexList",
    "lower_boundary", "build_index_list",
]


@dataclass(frozen=True)
class BoundarySpec:
    """``rule(outgoing, d, stencil)`` gives the reflected population for the
    link along direction ``d``; ``payload`` symbols are supplied per link by
    index lists and become kernel parameters otherwise."""

    name: str
    rule: Callable
    payload: tuple = ()

    def link_value(self, outgoing: Expr, d: int, s: Stencil) -> Expr:
        return sympify(self.rule(outgoing, d, s))


def NoSlip(name: str = "noslip") -> BoundarySpec:
    """Half-way bounce-back."""
    return BoundarySpec(name, lambda f, d, s: f)


def UBB(velocity: Sequence, name: str = "ubb", rho0=1, payload: Sequence = ()) -> BoundarySpec:
    """Bounce-back of a moving wall: ``f - 2 w_d rho0 (c_d . u_wall) / cs2``.

    Entries of ``velocity`` may be numbers or symbols; symbols listed in
    ``payload`` are read per link from index lists.
    """
    u = [Symbol(v) if isinstance(v, str) else sympify(Fraction(v) if isinstance(
        v, (int, float, Fraction)) else v) for v in velocity]
    payload = tuple(Symbol(p) if isinstance(p, str) else p for p in payload)

    def rule(f, d, s):
        cu = add(*[mul(ci, ui) for ci, ui in zip(s.directions[d], u)])
        return add(f, mul(-2, s.weights[d], sympify(rho0), 1 / Fraction(s.cs2), cu))
    return BoundarySpec(name, rule, payload)


def user_defined(name: str, rule: Callable, payload: Sequence = ()) -> BoundarySpec:
    """Arbitrary symbolic link rule ``rule(outgoing, d, stencil) -> Expr``;
    the stencil gives access to weights, directions and the sound speed."""
    return BoundarySpec(name, rule, tuple(payload))


class BoundaryMode(enum.Enum):
    FULL_FIELD_FLAG = "flag"
    INDEX_LIST = "index-list"
    COMPILED_IN = "compiled-in"


def _link_assignment(bc: BoundarySpec, pattern: StreamingPattern, s: Stencil, pdf: Field, d: int):
    db = s.opposite[d]
    roff, rslot = read_slot(pattern, s, db)
    woff, wslot = write_slot(pattern.previous, s, d)
    return Assignment(pdf(roff, rslot), bc.link_value(pdf(woff, wslot), d, s))


def lower_boundary(bc: BoundarySpec, pattern: StreamingPattern, mode: BoundaryMode, s: Stencil,
                   pdf: Field, flags: Field | None = None, mask: int | None = None,
                   name: str | None = None):
    """Boundary kernel run before a sweep of ``pattern`` (whose parity fixes
    the storage state), or a :class:`CompiledIn` record for ``lower``."""
    pattern = StreamingPattern(pattern)
    mode = BoundaryMode(mode)
    if pattern is StreamingPattern.COLLIDE_ONLY:
        raise UnsupportedBoundaryError("collide-only has no streaming step to attach boundaries to")
    if pdf.index_size != s.q:
        raise ValueError(f"field {pdf.name} does not fit {s.name}")
    name = name or f"{bc.name}_{pattern.value.replace('-', '_')}"
    if mode is BoundaryMode.COMPILED_IN:
        if flags is None or mask is None:
            raise ValueError("compiled-in boundaries need a flag field and mask")
        return CompiledIn(bc, flags, int(mask))
    links = [d for d, c in enumerate(s.directions) if any(c)]
    if mode is BoundaryMode.FULL_FIELD_FLAG:
        if flags is None or mask is None:
            raise ValueError("flag-field boundaries need a flag field and mask")
        body = [Conditional((FlagTest(flags(s.directions[d]), int(mask)),),
                            (_link_assignment(bc, pattern, s, pdf, d),)) for d in links]
        return KernelAST(name, (pdf, flags), body, guard=(FlagTest(flags(), FLUID),),
                         pattern=pattern, info={"stencil": s, "boundary": bc})
    cases = [(d, (_link_assignment(bc, pattern, s, pdf, d),)) for d in links]
    return KernelAST(name, (pdf,), kind="index_list", cases=cases, payload=bc.payload,
                     pattern=pattern, info={"stencil": s, "boundary": bc})


@dataclass
class IndexList:
    """One entry per boundary link: cell coordinate (array coordinates),
    link direction and optional payload columns."""

    coords: np.ndarray
    dirs: np.ndarray
    payload: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.dirs)

    def packed(self) -> np.ndarray:
        """``(n, d + 1)`` int64 rows ``(x_0, ..., x_{d-1}, direction)``."""
        return np.ascontiguousarray(np.column_stack([self.coords, self.dirs]).astype(np.int64))

    def payload_columns(self, names: Sequence) -> np.ndarray:
        """Structure-of-arrays payload, one contiguous column per name."""
        cols = [np.asarray(self.payload[str(n)], dtype=float) for n in names]
        if not cols:
            return np.zeros(0)
        return np.ascontiguousarray(np.concatenate(cols))


def build_index_list(flags: np.ndarray, mask: int, s: Stencil, fluid_mask: int = FLUID,
                     payload: Mapping | None = None) -> IndexList:
    """Links from fluid cells to neighbors carrying ``mask``.

    Entries are ordered cell-major (axis 0 fastest, matching the kernel loop
    order) and then by direction index; neighbors outside the array are
    skipped.  ``payload`` maps names to constants or to callables
    ``fn(coord, d)``.
    """
    flags = np.asarray(flags)
    if flags.ndim == s.d + 1:
        flags = flags[..., 0]
    if flags.ndim != s.d:
        raise ValueError("flag array dimension does not match the stencil")
    shape = flags.shape
    fluid = np.argwhere((flags & fluid_mask) != 0)
    order = np.lexsort(fluid.T) if len(fluid) else np.array([], dtype=int)
    coords, dirs = [], []
    for x in fluid[order]:
        for d, c in enumerate(s.directions):
            if not any(c):
                continue
            nb = x + np.asarray(c)
            if np.any(nb < 0) or np.any(nb >= np.asarray(shape)):
                continue
            if flags[tuple(nb)] & mask:
                coords.append(tuple(int(v) for v in x))
                dirs.append(d)
    coords_arr = np.array(coords, dtype=np.int64).reshape(-1, s.d)
    dirs_arr = np.array(dirs, dtype=np.int64)
    cols = {}
    for key, v in (payload or {}).items():
        if callable(v):
            cols[str(key)] = np.array([v(tuple(c), d) for c, d in zip(coords, dirs)], dtype=float)
        else:
            cols[str(key)] = np.full(len(dirs), float(v))
    return IndexList(coords_arr, dirs_arr, cols)
