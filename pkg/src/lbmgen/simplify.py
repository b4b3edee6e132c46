"""Custom simplification pipeline for collision rules and strategy selection.

Every stage maps a :class:`CollisionRule` to an equivalent one.  The custom
pipeline works on the main assignments split by relaxation-rate factors:
each main is kept as ``sum_k rate_k * P_k + R`` with polynomial ``P_k``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .methods.assemble import CollisionRule
from .symexpr import (
    Assignment, Expr, FlopCount, Symbol, add, as_poly_terms, count_expr,
    expand, free_symbols, fresh_symbols, from_poly_terms,
    global_cse, mul, power, topological_sort,
)

__all__ = [
    "Strategy", "SimplificationReport", "expand_mains",
    "replace_quadratic_velocity_products", "factor_rates", "common_quadratic_term",
    "extract_common_quadratic_term", "substitute_existing_subexpressions",
    "direction_aware_cse", "default_cse", "run_strategy", "select_best",
    "render_reports",
]


class Strategy(enum.Enum):
    ONLY_CSE = "only-cse"
    CUSTOM_DIRECTION = "custom-direction"
    CUSTOM_DEFAULT = "custom-default"


STRATEGY_ORDER = (Strategy.ONLY_CSE, Strategy.CUSTOM_DIRECTION, Strategy.CUSTOM_DEFAULT)


@dataclass
class SimplificationReport:
    strategy: Strategy
    stages: list = field(default_factory=list)
    # reports of every strategy tried by select_best, in strategy order
    alternatives: list = field(default_factory=list)

    def record(self, name: str, rule: CollisionRule):
        self.stages.append((name, rule.flops()))

    @property
    def final(self) -> FlopCount:
        return self.stages[-1][1] if self.stages else FlopCount()

    def render(self) -> str:
        rows = [(name, str(c.adds), str(c.muls), str(c.divs), str(c.sqrts), str(c.total))
                for name, c in self.stages]
        header = ("stage", "adds", "muls", "divs", "sqrts", "total")
        widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]
        fmt = lambda r: "  ".join(x.ljust(w) if i == 0 else x.rjust(w)  # noqa: E731
                                  for i, (x, w) in enumerate(zip(r, widths)))
        lines = [f"strategy: {self.strategy.value}", fmt(header), fmt(["-" * w for w in widths])]
        lines += [fmt(r) for r in rows]
        return "\n".join(lines)


def render_reports(reports, chosen: Strategy | None = None) -> str:
    blocks = [r.render() for r in reports]
    summary = ["summary:"] + [f"  {r.strategy.value:<17} {r.final.total}" for r in reports]
    if chosen is not None:
        summary.append(f"selected: {chosen.value}")
    return "\n\n".join(blocks + ["\n".join(summary)])


# --------------------------------------------------------------------------
# rate-split polynomial view of main assignments

def _rate_key(mono: frozenset, rates: frozenset) -> tuple:
    return tuple(sorted(((a, k) for a, k in mono if a in rates), key=lambda t: t[0].name))


def _split(expr: Expr, rates: frozenset) -> dict:
    """``{rate factor key: {monomial without rates: coeff}}`` of the expanded form."""
    out: dict = {}
    for mono, c in as_poly_terms(expr).items():
        key = _rate_key(mono, rates)
        rest = frozenset((a, k) for a, k in mono if a not in rates)
        bucket = out.setdefault(key, {})
        bucket[rest] = bucket.get(rest, 0) + c
        if not bucket[rest]:
            del bucket[rest]
    return {k: v for k, v in out.items() if v}


def _join(parts: dict) -> Expr:
    return add(*[mul(*[power(a, k) for a, k in key], from_poly_terms(p)) for key, p in parts.items()])


def _rates(rule: CollisionRule) -> frozenset:
    return frozenset(rule.rate_symbols)


def _map_mains(rule: CollisionRule, fn) -> CollisionRule:
    return rule.replace(mains=tuple(Assignment(a.target, fn(a.value)) for a in rule.mains))


def _taken(rule: CollisionRule) -> set:
    out = set(rule.pre) | set(rule.post)
    for a in rule.all_assignments:
        out.add(a.target)
        out |= free_symbols(a.value)
    return out


# --------------------------------------------------------------------------
# stages

def expand_mains(rule: CollisionRule) -> CollisionRule:
    return _map_mains(rule, expand)


def _velocity_pair(mono: frozenset, velocity: dict):
    """``(i, j)`` if the velocity part of ``mono`` is exactly ``u_i u_j`` with i < j."""
    vel = [(velocity[a], k) for a, k in mono if a in velocity]
    if len(vel) == 2 and all(k == 1 for _, k in vel):
        i, j = sorted(v for v, _ in vel)
        return i, j
    return None


def replace_quadratic_velocity_products(rule: CollisionRule) -> CollisionRule:
    """``u_i u_j -> (e^2 - u_i^2 - u_j^2)/2`` with one subexpression ``e = u_i + u_j`` per pair.

    Only monomials whose velocity part is a single mixed product are
    rewritten, so repeated application terminates.
    """
    u = list(rule.velocity)
    velocity = {s: i for i, s in enumerate(u)}
    taken = {s.name for s in _taken(rule) if isinstance(s, Symbol)}
    pair_syms: dict = {}

    def pair_symbol(i, j):
        if (i, j) not in pair_syms:
            name = f"u{i}Pu{j}"
            while name in taken:
                name += "_"
            pair_syms[(i, j)] = Symbol(name)
        return pair_syms[(i, j)]

    def rewrite(value):
        terms = as_poly_terms(value)
        if not any(_velocity_pair(m, velocity) for m in terms):
            return value
        out = []
        for mono, c in terms.items():
            pair = _velocity_pair(mono, velocity)
            factors = [power(a, k) for a, k in mono if a not in velocity or pair is None]
            if pair is None:
                out.append(mul(c, *factors))
                continue
            i, j = pair
            e = pair_symbol(i, j)
            square_diff = add(power(e, 2), mul(-1, power(u[i], 2)), mul(-1, power(u[j], 2)))
            out.append(mul(Fraction(c) / 2, *factors, square_diff))
        return add(*out)

    mains = tuple(Assignment(a.target, rewrite(a.value)) for a in rule.mains)
    if not pair_syms:
        return rule
    new = [Assignment(s, add(u[i], u[j])) for (i, j), s in sorted(pair_syms.items())]
    return rule.replace(mains=mains, subexpressions=tuple(topological_sort(list(rule.subexpressions) + new)))


def factor_rates(rule: CollisionRule) -> CollisionRule:
    """Collect every main with respect to all relaxation-rate symbols."""
    rates = _rates(rule)
    return _map_mains(rule, lambda v: _join(_split(v, rates)))


def _center_index(rule: CollisionRule):
    for q, c in enumerate(rule.stencil.directions):
        if not any(c):
            return q
    return None


def common_quadratic_term(rule: CollisionRule):
    """Center output with populations set to zero and rates to one, scaled so
    the density has coefficient one; ``None`` without a density term."""
    q = _center_index(rule)
    if q is None or q >= len(rule.mains):
        return None
    bindings = {f: 0 for f in rule.pre}
    bindings.update({r: 1 for r in rule.rate_symbols})
    center = expand(rule.mains[q].value.subs(bindings))
    terms = as_poly_terms(center)
    c = terms.get(frozenset([(rule.density, 1)]))
    if not c:
        return None
    return expand(mul(Fraction(1) / c, center))


def extract_common_quadratic_term(rule: CollisionRule) -> CollisionRule:
    """Introduce the common quadratic term as a subexpression and substitute
    it into every rate group that contains a multiple of it."""
    term = common_quadratic_term(rule)
    if term is None or term == rule.density:
        return rule
    names = {s.name for s in _taken(rule) if isinstance(s, Symbol)}
    name = "commonQuadraticTerm"
    while name in names:
        name += "_"
    sym = Symbol(name)
    pattern = as_poly_terms(term)
    anchor = frozenset([(rule.density, 1)])
    rates = _rates(rule)
    used = False

    def rewrite(value):
        nonlocal used
        parts = _split(value, rates)
        for key, p in parts.items():
            a = p.get(anchor)
            if not a:
                continue
            cand = dict(p)
            for m, c in pattern.items():
                cand[m] = cand.get(m, 0) - a * c
                if not cand[m]:
                    del cand[m]
            cand[frozenset([(sym, 1)])] = a
            if count_expr(from_poly_terms(cand)).total <= count_expr(from_poly_terms(p)).total:
                parts[key] = cand
                used = True
        return _join(parts)

    mains = tuple(Assignment(x.target, rewrite(x.value)) for x in rule.mains)
    if not used:
        return rule
    subs = topological_sort(list(rule.subexpressions) + [Assignment(sym, term)])
    return rule.replace(mains=mains, subexpressions=tuple(subs))


def _is_linear(poly: dict) -> bool:
    return all(sum(k for _, k in m) == 1 and all(k > 0 for _, k in m) for m in poly)


def _patterns(rule: CollisionRule) -> list:
    """``(symbol, poly)`` for every subexpression that is a sum, largest first.

    Linear subexpressions are also offered in their fully inlined form, so
    e.g. the plain population sum is recognized as the density.
    """
    defs = {a.target: a.value for a in rule.subexpressions}
    rates = _rates(rule)
    out = []
    inlined: dict = {}

    def full(s):
        # inlined polynomial of a linear chain of subexpressions, else None
        if s not in inlined:
            inlined[s] = None
            poly = as_poly_terms(defs[s])
            if _is_linear(poly):
                acc: dict = {}
                for m, c in poly.items():
                    (x, _), = m
                    sub = full(x) if x in defs else {m: 1}
                    if sub is None:
                        return None
                    for mm, cc in sub.items():
                        acc[mm] = acc.get(mm, 0) + c * cc
                inlined[s] = {m: c for m, c in acc.items() if c}
        return inlined[s]

    for a in topological_sort(list(rule.subexpressions)):
        if a.target in rates:
            continue
        for poly in (as_poly_terms(a.value), full(a.target)):
            if poly is None or len(poly) < 2 or any(k < 0 for m in poly for _, k in m):
                continue
            if not any(p == poly and s == a.target for s, p in out):
                out.append((a.target, poly))
    out.sort(key=lambda t: -len(t[1]))
    return out


def _divide(mono: frozenset, by: frozenset):
    d = dict(mono)
    for a, k in by:
        if d.get(a, 0) < k:
            return None
        d[a] -= k
        if not d[a]:
            del d[a]
    return frozenset(d.items())


def _times(a: frozenset, b: frozenset) -> frozenset:
    d = dict(a)
    for x, k in b:
        d[x] = d.get(x, 0) + k
    return frozenset(d.items())


def _substitute_pattern(p: dict, sym: Symbol, pattern: dict) -> dict:
    """Replace every ``r * X * pattern`` contained in ``p`` by ``r * X * sym``."""
    lead, lead_c = next(iter(sorted(pattern.items(), key=lambda t: repr(sorted(t[0], key=repr)))))
    changed = True
    while changed:
        changed = False
        for mono in list(p):
            if mono not in p:
                continue
            x = _divide(mono, lead)
            if x is None:
                continue
            r = Fraction(p[mono]) / lead_c
            targets = {_times(x, m): r * c for m, c in pattern.items()}
            if all(p.get(m) == c for m, c in targets.items()):
                for m in targets:
                    del p[m]
                key = _times(x, frozenset([(sym, 1)]))
                p[key] = p.get(key, 0) + r
                if not p[key]:
                    del p[key]
                changed = True
    return p


def substitute_existing_subexpressions(rule: CollisionRule) -> CollisionRule:
    """Find (scaled, possibly multiplied) occurrences of subexpression values
    inside the mains and replace them by the subexpression symbols."""
    patterns = _patterns(rule)
    if not patterns:
        return rule
    rates = _rates(rule)

    def rewrite(value):
        parts = _split(value, rates)
        for key in parts:
            p = dict(parts[key])
            for sym, pattern in patterns:
                p = _substitute_pattern(p, sym, pattern)
            parts[key] = p
        return _join(parts)

    return _map_mains(rule, rewrite)


def default_cse(rule: CollisionRule) -> CollisionRule:
    subs, mains = global_cse(rule.subexpressions, rule.mains)
    return rule.replace(subexpressions=tuple(subs), mains=tuple(mains))


def direction_aware_cse(rule: CollisionRule, s=None) -> CollisionRule:
    """Pair opposite directions, split their rate groups into the part with
    equal coefficients and the part with opposite coefficients, then run a
    global CSE."""
    s = s or rule.stencil
    rates = _rates(rule)
    mains = list(rule.mains)
    gen = fresh_symbols("dir_", _taken(rule))
    new = []
    if len(mains) == s.q:
        for q, qb in s.opposite_pairs():
            a_parts, b_parts = _split(mains[q].value, rates), _split(mains[qb].value, rates)
            # dict order, not set order: subexpression numbering must not depend on hashing
            for key in [k for k in a_parts if k in b_parts]:
                pa, pb = a_parts[key], b_parts[key]
                even = {m: c for m, c in pa.items() if pb.get(m) == c}
                odd = {m: c for m, c in pa.items() if pb.get(m) == -c}
                for group, sign in ((even, 1), (odd, -1)):
                    if len(group) < 2:
                        continue
                    sym = next(gen)
                    new.append(Assignment(sym, from_poly_terms(group)))
                    for m in group:
                        del pa[m]
                        del pb[m]
                    mono = frozenset([(sym, 1)])
                    pa[mono] = pa.get(mono, 0) + 1
                    pb[mono] = pb.get(mono, 0) + sign
            mains[q] = Assignment(mains[q].target, _join(a_parts))
            mains[qb] = Assignment(mains[qb].target, _join(b_parts))
    rule = rule.replace(mains=tuple(mains),
                        subexpressions=tuple(topological_sort(list(rule.subexpressions) + new)))
    return default_cse(rule)


# --------------------------------------------------------------------------

CUSTOM_STAGES = (
    ("expand", expand_mains),
    ("quadratic velocity products", replace_quadratic_velocity_products),
    ("expand", expand_mains),
    ("factor rates", factor_rates),
    ("common quadratic term", extract_common_quadratic_term),
    ("substitute existing subexpressions", substitute_existing_subexpressions),
)


def run_strategy(rule: CollisionRule, strategy: Strategy):
    """Apply one strategy; returns ``(rule, report)``."""
    strategy = Strategy(strategy)
    report = SimplificationReport(strategy)
    report.record("initial", rule)
    if strategy is not Strategy.ONLY_CSE:
        for name, stage in CUSTOM_STAGES:
            rule = stage(rule)
            report.record(name, rule)
    if strategy is Strategy.CUSTOM_DIRECTION:
        rule = direction_aware_cse(rule)
        report.record("direction cse", rule)
    else:
        rule = default_cse(rule)
        report.record("cse", rule)
    return rule, report


def select_best(rule: CollisionRule, s=None):
    """Run all strategies and keep the cheapest; ties go to the earlier
    strategy in ``STRATEGY_ORDER``.  The returned report lists all runs in
    ``alternatives``."""
    results = [run_strategy(rule, st) for st in STRATEGY_ORDER]
    best = min(range(len(results)), key=lambda i: (results[i][1].final.total, i))
    chosen, report = results[best]
    report.alternatives = [r for _, r in results]
    return chosen, report
