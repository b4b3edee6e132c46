"""Lowering of collision rules to kernels, slot maps and loop splitting.

Slot maps, per direction q with velocity c (``c+`` = componentwise max(c, 0)):

=================  ======================  ======================
pattern            read f_q from           write f*_q to
=================  ======================  ======================
TWO_ARRAY_PULL     src[x - c](q)           dst[x](q)
TWO_ARRAY_PUSH     src[x](q)               dst[x + c](q)
COLLIDE_ONLY       src[x](q)               src[x](q)
AA_EVEN            f[x](q)                 f[x](qbar)
AA_ODD             f[x - c](qbar)          f[x + c](q)
ESO_EVEN           f[x + (-c)+](q)         f[x + c+](qbar)
ESO_ODD            f[x + (-c)+](qbar)      f[x + c+](q)
=================  ======================  ======================

EsoTwist keeps the pre-collision value of f_q at cell x in slot q of cell
``x + (-c)+`` before an even sweep and in slot qbar of that cell before an
odd sweep.  Every cell only touches its own slots and those of its
neighbors on one side, so both sweeps are in place and cell independent.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..lattice import Stencil
from ..symexpr import Assignment, Indexed, Symbol, topological_sort
from .ir import (
    FLUID, Field, FlagTest, KernelAST, Select, SplitInfo,
    StreamingPattern, statement_reads, statement_writes,
)

__all__ = [
    "PatternFieldError", "SplitError", "UnsupportedBoundaryError", "read_slot",
    "write_slot", "lower", "split_inner_loop", "CompiledIn",
]

P = StreamingPattern


class PatternFieldError(ValueError):
    pass


class SplitError(ValueError):
    pass


class UnsupportedBoundaryError(ValueError):
    pass


def _neg(c):
    return tuple(-x for x in c)


def _pos(c):
    return tuple(max(x, 0) for x in c)


def read_slot(pattern: StreamingPattern, s: Stencil, q: int) -> tuple:
    """``(offset, slot)`` the sweep reads the pre-collision f_q from."""
    c, qb = s.directions[q], s.opposite[q]
    zero = (0,) * s.d
    table = {
        P.TWO_ARRAY_PULL: (_neg(c), q),
        P.TWO_ARRAY_PUSH: (zero, q),
        P.COLLIDE_ONLY: (zero, q),
        P.AA_EVEN: (zero, q),
        P.AA_ODD: (_neg(c), qb),
        P.ESO_EVEN: (_pos(_neg(c)), q),
        P.ESO_ODD: (_pos(_neg(c)), qb),
    }
    return table[pattern]


def write_slot(pattern: StreamingPattern, s: Stencil, q: int) -> tuple:
    """``(offset, slot)`` the sweep stores the post-collision f*_q to."""
    c, qb = s.directions[q], s.opposite[q]
    zero = (0,) * s.d
    table = {
        P.TWO_ARRAY_PULL: (zero, q),
        P.TWO_ARRAY_PUSH: (c, q),
        P.COLLIDE_ONLY: (zero, q),
        P.AA_EVEN: (zero, qb),
        P.AA_ODD: (c, q),
        P.ESO_EVEN: (_pos(c), qb),
        P.ESO_ODD: (_pos(c), q),
    }
    return table[pattern]


@dataclass(frozen=True)
class CompiledIn:
    """A boundary compiled into the collision kernel as conditional loads."""

    bc: object
    flags: Field
    mask: int


def _check_fields(rule, pattern, src, dst):
    s = rule.stencil
    if src.index_size != s.q or src.spatial_dims != s.d:
        raise PatternFieldError(f"field {src.name} does not fit {s.name}")
    if pattern.two_array:
        if dst is None or dst == src or dst.name == src.name:
            raise PatternFieldError(f"{pattern.name} needs two distinct fields")
        if dst.index_size != s.q or dst.spatial_dims != s.d:
            raise PatternFieldError(f"field {dst.name} does not fit {s.name}")
    elif dst is not None and dst != src:
        raise PatternFieldError(f"{pattern.name} works in place on a single field")


def lower(rule, pattern: StreamingPattern, src: Field, dst: Field | None = None,
          boundaries=(), name: str | None = None) -> KernelAST:
    """Kernel reading pre-collision values and writing post-collision values
    according to the slot map of ``pattern``.

    ``boundaries`` are :class:`CompiledIn` records; each turns the load of
    f_q into a conditional load when the upstream neighbor is flagged.
    """
    pattern = StreamingPattern(pattern)
    _check_fields(rule, pattern, src, dst)
    s = rule.stencil
    out = dst if pattern.two_array else src
    fields = [src] + ([dst] if pattern.two_array else [])
    boundaries = list(boundaries)
    if boundaries and pattern is P.COLLIDE_ONLY:
        raise UnsupportedBoundaryError("collide-only kernels have no streaming to attach boundaries to")
    flag_fields = []
    for b in boundaries:
        if b.flags not in flag_fields:
            flag_fields.append(b.flags)
    fields += flag_fields

    body = []
    for q, fq in enumerate(rule.pre):
        off, slot = read_slot(pattern, s, q)
        value = src(off, slot)
        for k, b in enumerate(boundaries):
            c = s.directions[q]
            if not any(c):
                continue
            d = s.opposite[q]   # link from x towards the upstream neighbor
            woff, wslot = write_slot(pattern.previous, s, d)
            bounced = b.bc.link_value(src(woff, wslot), d, s)
            tmp = fq if k == len(boundaries) - 1 else Symbol(f"{fq.name}_bc{k}")
            body.append(Select(tmp, (FlagTest(b.flags(_neg(c)), b.mask),), bounced, value))
            value = tmp
        if not isinstance(value, Symbol) or value != fq:
            body.append(Assignment(fq, value))
    body += topological_sort(list(rule.subexpressions))
    mains = {}
    for q, a in enumerate(rule.mains):
        off, slot = write_slot(pattern, s, q)
        st = Assignment(out(off, slot), a.value)
        mains[q] = st
        body.append(st)
    guard = (FlagTest(flag_fields[0](), FLUID),) if flag_fields else ()
    buffered = [x for x in (rule.density, *rule.velocity) if x in rule.defined()]
    info = {"stencil": s, "mains": mains, "buffered_default": tuple(buffered),
            "rule_parameters": tuple(rule.parameters)}
    return KernelAST(name or f"collide_{pattern.value.replace('-', '_')}", fields, body,
                     guard=guard, pattern=pattern, info=info)


def split_inner_loop(k: KernelAST, grouping=None, buffered=None, block: int = 64) -> KernelAST:
    """Split the cell body into sub-loops over blocks of the innermost axis.

    The first sub-loop computes the ``buffered`` symbols into line buffers
    and writes the first group (by default the center direction); every
    further sub-loop writes one group (by default an opposite-direction
    pair), recomputing whatever it needs apart from buffered values.
    Populations that an in-place sub-loop would load after an earlier
    sub-loop overwrote them are added to the buffered symbols.
    """
    if k.kind != "grid" or "mains" not in k.info:
        raise SplitError("only lowered collision kernels can be split")
    if k.split is not None:
        raise SplitError("kernel is already split")
    if block < 1:
        raise SplitError("block length must be positive")
    s = k.info["stencil"]
    mains = k.info["mains"]
    if grouping is None:
        center = [q for q, c in enumerate(s.directions) if not any(c)]
        grouping = [center] + [[q, qb] for q, qb in s.opposite_pairs()]
    grouping = [list(g) for g in grouping]
    covered = sorted(q for g in grouping for q in g)
    if covered != sorted(mains):
        raise SplitError("grouping must cover every direction exactly once")
    buffered = tuple(k.info["buffered_default"] if buffered is None else buffered)

    body = list(k.body)
    position = {}
    for i, st in enumerate(body):
        for t in statement_writes(st):
            if isinstance(t, Symbol):
                position[t] = i
    for b in buffered:
        if b not in position:
            raise SplitError(f"buffered symbol {b} is not computed by the kernel")
        later = [x for x in statement_reads(body[position[b]])
                 if isinstance(x, Symbol) and position.get(x, -1) > position[b]]
        if later:
            raise SplitError(f"buffered symbol {b} refers to later subexpression(s) "
                             f"{', '.join(sorted(x.name for x in later))}")

    def closure(roots, stop):
        need = set()
        todo = list(roots)
        while todo:
            i = todo.pop()
            if i in need:
                continue
            need.add(i)
            for x in statement_reads(body[i]):
                if isinstance(x, Symbol) and x in position and x not in stop:
                    todo.append(position[x])
        return [body[i] for i in sorted(need)]

    index_of = {id(st): i for i, st in enumerate(body)}

    def build(buffered):
        groups = []
        for gi, g in enumerate(grouping):
            roots = [index_of[id(mains[q])] for q in g]
            if gi == 0:
                roots += [position[b] for b in buffered]
                groups.append(tuple(closure(roots, set())))
            else:
                groups.append(tuple(closure(roots, set(buffered))))
        return groups

    def hazards(groups):
        # loads in a later sub-loop of slots an earlier sub-loop overwrote in place
        written, found = set(), []
        for group in groups:
            for st in group:
                if isinstance(st, Assignment) and isinstance(st.target, Symbol):
                    if any(isinstance(x, Indexed) and x in written for x in statement_reads(st)):
                        found.append(st.target)
            written |= {t for st in group for t in statement_writes(st) if isinstance(t, Indexed)}
        return found

    groups = build(buffered)
    extra = hazards(groups)
    if extra:
        buffered = buffered + tuple(sorted(set(extra) - set(buffered), key=lambda x: position[x]))
        groups = build(buffered)
        if hazards(groups):
            raise SplitError("in-place sub-loops still read overwritten populations")
    return KernelAST(k.name + "_split", k.fields, k.body, guard=k.guard, pattern=k.pattern,
                     split=SplitInfo(block, buffered, tuple(groups)), info=k.info)

