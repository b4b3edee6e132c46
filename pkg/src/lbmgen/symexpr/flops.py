from __future__ import annotations

from dataclasses import dataclass

from .core import Add, Expr, Log, Mul, Pow, Rational, Sqrt

__all__ = ["FlopCount", "count_flops", "count_expr"]


@dataclass(frozen=True)
class FlopCount:
    adds: int = 0
    muls: int = 0
    divs: int = 0
    sqrts: int = 0
    logs: int = 0

    @property
    def total(self) -> int:
        return self.adds + self.muls + self.divs + self.sqrts + self.logs

    def __add__(self, other: "FlopCount") -> "FlopCount":
        return FlopCount(self.adds + other.adds, self.muls + other.muls,
                         self.divs + other.divs, self.sqrts + other.sqrts,
                         self.logs + other.logs)

    def as_row(self) -> tuple:
        return (self.adds, self.muls, self.divs, self.sqrts, self.logs, self.total)


def count_expr(e: Expr) -> FlopCount:
    """Operation count of a single tree (shared subtrees are counted each time).

    Subtraction counts as an addition; a product counts one multiplication
    per extra factor, where a -1 coefficient is free and every factor with
    a negative exponent is one division instead.
    """
    c = [0, 0, 0, 0, 0]
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Add):
            c[0] += len(n.args) - 1
            stack.extend(n.args)
        elif isinstance(n, Mul):
            num = 0
            for a in n.args:
                if isinstance(a, Rational):
                    if a.value not in (1, -1):
                        num += 1
                elif isinstance(a, Pow) and a.exp < 0:
                    c[2] += 1
                    c[1] += -a.exp - 1
                    stack.append(a.base)
                else:
                    num += 1
                    stack.append(a)
            c[1] += max(num - 1, 0)
        elif isinstance(n, Pow):
            if n.exp > 0:
                c[1] += n.exp - 1
            else:
                c[2] += 1
                c[1] += -n.exp - 1
            stack.append(n.base)
        elif isinstance(n, Sqrt):
            c[3] += 1
            stack.append(n.arg)
        elif isinstance(n, Log):
            c[4] += 1
            stack.append(n.arg)
    return FlopCount(*c)


def count_flops(assignments) -> FlopCount:
    total = FlopCount()
    for a in assignments:
        total = total + count_expr(a.value)
    return total
