"""Time stepping of lowered kernels on a ghost-layer grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..kernel import (
    FLUID, BoundaryMode, BoundarySpec, Field, Layout, StreamingPattern,
    build_index_list, compile_kernel, load_kernel, lower, lower_boundary,
    read_slot, split_inner_loop, write_slot,
)
from ..methods.assemble import CollisionRule
from ..symexpr import Assignment, ONE
from .grid import Grid, fill_periodic, wrap_slots

__all__ = ["Simulation", "SimulationDiverged", "WallSpec", "PATTERN_FAMILIES", "equilibrium_rule"]

P = StreamingPattern
PATTERN_FAMILIES = {
    "pull": (P.TWO_ARRAY_PULL,),
    "push": (P.TWO_ARRAY_PUSH,),
    "aa": (P.AA_EVEN, P.AA_ODD),
    "eso": (P.ESO_EVEN, P.ESO_ODD),
}


class SimulationDiverged(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"non-finite populations detected after step {step}")
        self.step = step


@dataclass(frozen=True)
class WallSpec:
    """Boundary condition applied to the cells selected by ``region``, an
    index expression into the padded flag array (ghost layer included)."""

    bc: BoundarySpec
    region: tuple
    payload: dict | None = None


def equilibrium_rule(rule: CollisionRule) -> CollisionRule:
    """The rule with every relaxation rate set to one (maps f to f_eq)."""
    rates = set(rule.rate_symbols)
    subs = []
    for a in rule.subexpressions:
        subs.append(Assignment(a.target, ONE) if a.target in rates else a)
    binding = {r: ONE for r in rates}
    return rule.replace(subexpressions=tuple(Assignment(a.target, a.value.subs(binding)) for a in subs),
                        mains=tuple(Assignment(a.target, a.value.subs(binding)) for a in rule.mains))


class Simulation:
    """Runs the collision rule under a streaming pattern on a periodic and/or
    walled box.

    The state between steps is kept in the storage layout of the pattern;
    :meth:`populations` returns the canonical pre-collision values that the
    next sweep reads.  Wall regions listed later override earlier ones.
    """

    def __init__(self, rule: CollisionRule, shape: Sequence[int], pattern: str = "pull",
                 periodic: Sequence[bool] | None = None, walls: Sequence[WallSpec] = (),
                 boundary_mode: BoundaryMode | str = BoundaryMode.INDEX_LIST,
                 params: dict | None = None, backend: str = "interp", layout: Layout = Layout.SOA,
                 split_block: int | None = None, check_every: int = 1):
        s = rule.stencil
        if len(shape) != s.d:
            raise ValueError(f"{s.name} needs a {s.d}D shape")
        if pattern not in PATTERN_FAMILIES:
            raise ValueError(f"unknown streaming pattern {pattern!r}")
        self.rule = rule
        self.stencil = s
        self.family = pattern
        self.sweeps = PATTERN_FAMILIES[pattern]
        self.periodic = tuple(periodic) if periodic is not None else (True,) * s.d
        self.params = dict(params or {})
        self.mode = BoundaryMode(boundary_mode)
        self.walls = list(walls)
        self.check_every = check_every
        self.time = 0

        self.src = Field("src", s.d, s.q, layout)
        self.dst = Field("dst", s.d, s.q, layout)
        self.flag_field = Field("flags", s.d, 1, dtype="uint")
        two = pattern in ("pull", "push")
        fields = [self.src] + ([self.dst] if two else []) + [self.flag_field]
        self.grid = Grid(shape, fields)
        flags = self.grid["flags"][..., 0]
        flags[tuple(slice(1, -1) for _ in shape)] = FLUID
        self.masks = []
        for i, w in enumerate(self.walls):
            mask = 1 << (i + 1)
            self.masks.append(mask)
            flags[w.region] = mask

        self._compile(backend, split_block)

    # -- kernels ---------------------------------------------------------
    def _compile(self, backend, split_block):
        s = self.stencil
        make = compile_kernel if backend == "interp" else load_kernel
        self.collide = []
        self.boundary = []
        self.index_lists = []
        for w, mask in zip(self.walls, self.masks):
            if self.mode is BoundaryMode.INDEX_LIST:
                self.index_lists.append(build_index_list(self.grid["flags"], mask, s,
                                                         payload=w.payload))
            else:
                self.index_lists.append(None)
        for pat in self.sweeps:
            dst = self.dst if pat.two_array else None
            compiled = []
            if self.mode is BoundaryMode.COMPILED_IN:
                compiled = [lower_boundary(w.bc, pat, self.mode, s, self.src, self.flag_field, m)
                            for w, m in zip(self.walls, self.masks)]
            k = lower(self.rule, pat, self.src, dst, boundaries=compiled)
            if split_block:
                k = split_inner_loop(k, block=split_block)
            self.collide.append(make(k))
            bks = []
            if self.mode is not BoundaryMode.COMPILED_IN:
                for w, m in zip(self.walls, self.masks):
                    bk = lower_boundary(w.bc, pat, self.mode, s, self.src, self.flag_field, m)
                    bks.append(make(bk))
            self.boundary.append(bks)
        # boundary kernels used to complete the state for readout; walls with
        # per-link payload need an index list to supply it
        self._readout = []
        for pat in self.sweeps:
            kernels = []
            for w, m, il in zip(self.walls, self.masks, self.index_lists):
                if w.bc.payload:
                    if il is None:
                        il = build_index_list(self.grid["flags"], m, s, payload=w.payload)
                    mode = BoundaryMode.INDEX_LIST
                else:
                    il, mode = None, BoundaryMode.FULL_FIELD_FLAG
                bk = lower_boundary(w.bc, pat, mode, s, self.src, self.flag_field, m)
                kernels.append((compile_kernel(bk), il))
            self._readout.append(kernels)

    def _arrays(self):
        a = {"src": self.grid["src"], "flags": self.grid["flags"]}
        if "dst" in self.grid.arrays:
            a["dst"] = self.grid["dst"]
        return a

    @property
    def next_sweep(self) -> StreamingPattern:
        return self.sweeps[self.time % len(self.sweeps)]

    # -- state conversion ------------------------------------------------
    def _slot_index(self, pat, reader: bool):
        s = self.stencil
        fn = read_slot if reader else write_slot
        return [fn(pat, s, q) for q in range(s.q)]

    def _cell_index(self, slots):
        n = self.grid.padded
        grids = np.meshgrid(*[np.arange(1, k - 1) for k in n], indexing="ij")
        return [tuple(g + o for g, o in zip(grids, off)) + (slot,) for off, slot in slots]

    def set_populations(self, f: np.ndarray):
        """Load populations ``(*shape, q)`` as the post-collision output of
        the sweep preceding the next one; streaming and boundaries turn them
        into the state that :meth:`populations` reports."""
        f = np.asarray(f, dtype=float)
        if f.shape != self.grid.shape + (self.stencil.q,):
            raise ValueError(f"expected populations of shape {self.grid.shape + (self.stencil.q,)}")
        arr = self.grid["src"]
        slots = self._slot_index(self.next_sweep.previous, False)
        for q, idx in enumerate(self._cell_index(slots)):
            arr[idx] = f[..., q]
        wrap_slots(arr, slots, self.periodic)

    def populations(self) -> np.ndarray:
        """Canonical pre-collision populations ``(*shape, q)`` for the next sweep."""
        arrays = {k: v.copy() for k, v in self._arrays().items()}
        fill_periodic(arrays["src"], self.periodic)
        i = self.time % len(self.sweeps)
        for bk, il in self._readout[i]:
            bk(arrays, self.params, il)
        out = np.empty(self.grid.shape + (self.stencil.q,))
        for q, idx in enumerate(self._cell_index(self._slot_index(self.next_sweep, True))):
            out[..., q] = arrays["src"][idx]
        return out

    def fluid_mask(self) -> np.ndarray:
        return (self.grid.interior("flags")[..., 0] & FLUID) != 0

    # -- stepping ----------------------------------------------------------
    def step(self, n: int = 1):
        for _ in range(n):
            i = self.time % len(self.sweeps)
            pat = self.sweeps[i]
            arrays = self._arrays()
            fill_periodic(arrays["src"], self.periodic)
            for bk, il in zip(self.boundary[i], self.index_lists):
                bk(arrays, self.params, il)
            self.collide[i](arrays, self.params)
            out = "dst" if pat.two_array else "src"
            wrap_slots(arrays[out], self._slot_index(pat, False), self.periodic)
            if pat.two_array:
                self.grid.arrays["src"], self.grid.arrays["dst"] = arrays["dst"], arrays["src"]
            self.time += 1
            if self.check_every and self.time % self.check_every == 0:
                self._check()

    def _check(self):
        inner = self.grid.interior("src")
        if not np.all(np.isfinite(inner[self.fluid_mask()])):
            raise SimulationDiverged(self.time)
