from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Expr, Indexed, Symbol, free_symbols, sympify
from .rewrite import substitute

__all__ = ["Assignment", "inline_all", "topological_sort", "fresh_symbols"]


@dataclass(frozen=True)
class Assignment:
    target: Expr
    value: Expr

    def __post_init__(self):
        if not isinstance(self.target, (Symbol, Indexed)):
            raise TypeError("assignment target must be a Symbol or Indexed leaf")
        object.__setattr__(self, "value", sympify(self.value))

    def __repr__(self):
        return f"{self.target} := {self.value}"


def inline_all(subexpressions: Sequence[Assignment], mains: Sequence[Assignment]) -> list:
    """Substitute every subexpression into the main assignments (in order)."""
    env: dict = {}
    for a in subexpressions:
        env[a.target] = substitute(a.value, env)
    return [Assignment(a.target, substitute(a.value, env)) for a in mains]


def topological_sort(assignments: Iterable[Assignment]) -> list:
    """Order assignments so definitions precede uses; stable w.r.t. input order."""
    items = list(assignments)
    defined = {a.target: i for i, a in enumerate(items)}
    deps = []
    for a in items:
        deps.append({defined[s] for s in free_symbols(a.value) if s in defined and s != a.target})
    out = []
    state = {}

    def visit(i):
        st = state.get(i)
        if st == 2:
            return
        if st == 1:
            raise ValueError(f"cyclic dependency through {items[i].target}")
        state[i] = 1
        for j in sorted(deps[i]):
            visit(j)
        state[i] = 2
        out.append(items[i])

    for i in range(len(items)):
        visit(i)
    return out


def fresh_symbols(prefix: str, taken: Iterable[Expr] = ()):
    """Generate ``prefix0, prefix1, ...`` skipping names already in use."""
    names = {s.name for s in taken if isinstance(s, Symbol)}
    i = 0
    while True:
        name = f"{prefix}{i}"
        i += 1
        if name not in names:
            yield Symbol(name)
