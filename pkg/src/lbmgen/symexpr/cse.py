"""Common subexpression elimination.

Two phases, both deterministic:

1. *Argument-set matching*.  Every sum and product is viewed as a set of
   operands.  Pairs of sums (and pairs of products) sharing two or more
   operands get the shared part split off into a new node, which every
   other operation containing the same operands reuses.  This exposes
   shared sub-terms that plain subtree matching would miss, e.g.
   ``a+b+c`` and ``a+b+d`` both become ``(a+b) + ...``.  Negated products
   are viewed as ``-1 * (positive product)`` so both signs can share.
2. *Repeated subtree elimination* on the rewritten forest: every non-leaf
   subtree reached twice becomes a temporary.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .assign import Assignment, fresh_symbols, topological_sort
from .core import (
    NEG_ONE, Add, Expr, Indexed, Mul, Pow, Rational, Symbol, add, free_symbols,
    mul, power,
)

__all__ = ["cse", "global_cse"]

_LEAVES = (Symbol, Indexed, Rational)


class _Uneval:
    """An operation node that is not canonicalized until rebuild time."""

    __slots__ = ("op", "args", "_hash")

    def __init__(self, op: str, args: tuple):
        self.op = op
        self.args = args
        self._hash = hash((op, args))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, _Uneval) and self.op == other.op and self.args == other.args


def _args(node):
    return node.args


def _is_leaf(node) -> bool:
    return isinstance(node, _LEAVES)


class _ArgTracker:
    def __init__(self, funcs: list, op: str, opt_subs: dict):
        self.value_number: dict = {}
        self.values: list = []
        self.func_to_argset: list = []
        self.arg_to_funcset: dict = {}
        for i, f in enumerate(funcs):
            view = opt_subs.get(f, f)
            nums = set()
            for a in _args(view):
                nums.add(self.number(a))
            self.func_to_argset.append(nums)
            for n in nums:
                self.arg_to_funcset.setdefault(n, set()).add(i)

    def number(self, node) -> int:
        n = self.value_number.get(node)
        if n is None:
            n = len(self.values)
            self.value_number[node] = n
            self.values.append(node)
        return n

    def args_in_order(self, argset) -> tuple:
        return tuple(self.values[n] for n in sorted(argset))

    def common_candidates(self, argset, min_i: int) -> dict:
        counts: dict = {}
        for a in argset:
            for j in self.arg_to_funcset.get(a, ()):
                if j >= min_i:
                    counts[j] = counts.get(j, 0) + 1
        return {j: c for j, c in counts.items() if c > 1}

    def subset_candidates(self, argset, restrict) -> list:
        it = iter(sorted(argset))
        idx = set(self.arg_to_funcset.get(next(it), ()))
        idx &= restrict
        for a in it:
            idx &= self.arg_to_funcset.get(a, set())
        return sorted(idx)

    def update(self, i: int, new_argset: set):
        old = self.func_to_argset[i]
        for a in old - new_argset:
            self.arg_to_funcset[a].discard(i)
        for a in new_argset - old:
            self.arg_to_funcset.setdefault(a, set()).add(i)
        self.func_to_argset[i] = new_argset

    def stop(self, i: int):
        for a in self.func_to_argset[i]:
            self.arg_to_funcset[a].discard(i)


def _match_common_args(op: str, funcs: list, opt_subs: dict, largest_first: bool):
    funcs = sorted(funcs, key=lambda f: (len(_args(opt_subs.get(f, f))), f.sort_key()))
    tr = _ArgTracker(funcs, op, opt_subs)
    changed: set = set()
    for i in range(len(funcs)):
        counts = tr.common_candidates(tr.func_to_argset[i], i + 1)
        if largest_first:
            order = sorted(counts, key=lambda j: (-counts[j], j))
        else:
            order = sorted(counts, key=lambda j: (counts[j], j))
        remaining = set(order)
        for j in order:
            if j not in remaining:
                continue
            remaining.discard(j)
            com = tr.func_to_argset[i] & tr.func_to_argset[j]
            if len(com) <= 1:
                continue
            diff_i = tr.func_to_argset[i] - com
            if diff_i:
                com_node = _Uneval(op, tr.args_in_order(com))
                com_num = tr.number(com_node)
                tr.update(i, diff_i | {com_num})
                changed.add(i)
            else:
                com_num = tr.number(funcs[i])
            tr.update(j, (tr.func_to_argset[j] - com) | {com_num})
            changed.add(j)
            for k in tr.subset_candidates(com, remaining):
                tr.update(k, (tr.func_to_argset[k] - com) | {com_num})
                changed.add(k)
        if i in changed:
            opt_subs[funcs[i]] = _Uneval(op, tr.args_in_order(tr.func_to_argset[i]))
        tr.stop(i)


def _build(op: str, args) -> Expr:
    if op == "add":
        return add(*args)
    if op == "mul":
        return mul(*args)
    raise ValueError(op)


def cse(exprs: Sequence[Expr], symbol_gen: Iterable[Symbol], largest_first: bool = True):
    """Return ``(replacements, reduced)``; ``replacements`` is a list of
    ``(symbol, expr)`` in dependency order."""
    exprs = list(exprs)
    opt_subs: dict = {}
    adds: dict = {}
    muls: dict = {}
    seen: set = set()

    def find_opts(e):
        stack = [e]
        while stack:
            n = stack.pop()
            if _is_leaf(n) or n in seen:
                continue
            seen.add(n)
            stack.extend(n.args)
            if isinstance(n, Mul) and isinstance(n.args[0], Rational) and n.args[0].value < 0:
                pos = mul(-1, n)
                if not _is_leaf(pos):
                    opt_subs[n] = _Uneval("mul", (NEG_ONE, pos))
                    stack.append(pos)
                continue
            if isinstance(n, Pow) and n.exp < -1:
                opt_subs[n] = _Uneval("pow", (power(n.base, -n.exp),))
                stack.append(power(n.base, -n.exp))
                continue
            if isinstance(n, Add):
                adds[n] = None
            elif isinstance(n, Mul):
                muls[n] = None

    for e in exprs:
        find_opts(e)
    _match_common_args("mul", list(muls), opt_subs, largest_first)
    _match_common_args("add", list(adds), opt_subs, largest_first)

    seen_sub: set = set()
    to_eliminate: set = set()

    def find_repeated(root):
        stack = [root]
        while stack:
            n = stack.pop()
            if _is_leaf(n):
                continue
            if n in seen_sub:
                to_eliminate.add(n)
                continue
            seen_sub.add(n)
            view = opt_subs.get(n, n)
            stack.extend(reversed(view.args))

    for e in exprs:
        find_repeated(e)

    symbols = iter(symbol_gen)
    subs: dict = {}
    memo: dict = {}
    replacements = []

    def rebuild(n):
        if _is_leaf(n):
            return n
        r = subs.get(n)
        if r is not None:
            return r
        r = memo.get(n)
        if r is not None:
            return r
        view = opt_subs.get(n, n)
        new_args = [rebuild(a) for a in view.args]
        if isinstance(view, _Uneval):
            if view.op == "pow":
                new = power(new_args[0], -1)
            else:
                new = _build(view.op, new_args)
        elif all(x is y for x, y in zip(new_args, view.args)):
            new = view
        else:
            new = view.rebuild(new_args)
        if n in to_eliminate:
            sym = next(symbols)
            replacements.append((sym, new))
            subs[n] = sym
            return sym
        memo[n] = new
        return new

    import sys
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20000))
    try:
        reduced = [rebuild(e) for e in exprs]
    finally:
        sys.setrecursionlimit(old_limit)
    return replacements, reduced


def global_cse(subexpressions: Sequence[Assignment], mains: Sequence[Assignment] = (),
               prefix: str = "xi_", largest_first: bool = True):
    """CSE over a whole assignment list; returns ``(subexpressions, mains)``.

    Existing subexpressions keep their targets.  New temporaries are named
    ``prefix0, prefix1, ...`` and the subexpression list comes back
    topologically ordered.
    """
    subexpressions = list(subexpressions)
    mains = list(mains)
    everything = subexpressions + mains
    taken = set()
    for a in everything:
        taken |= free_symbols(a.value)
        taken.add(a.target)
    gen = fresh_symbols(prefix, taken)
    repl, reduced = cse([a.value for a in everything], gen, largest_first)
    new_sub = [Assignment(s, v) for s, v in repl]
    n = len(subexpressions)
    old_sub = [Assignment(a.target, v) for a, v in zip(subexpressions, reduced[:n])]
    new_main = [Assignment(a.target, v) for a, v in zip(mains, reduced[n:])]
    main_targets = {a.target for a in mains}
    subs = topological_sort(old_sub + new_sub)
    if any(a.target in main_targets for a in subs):
        raise ValueError("main target reused as subexpression")
    return subs, new_main
