"""Built-in DdQq velocity sets.

Directions are ordered by Manhattan length and then lexicographically on
their components, so the rest direction is always index 0.  This order is
part of the emitted kernel ABI and of every index list.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

__all__ = ["Stencil", "builtin", "opposite_index", "SUPPORTED", "UnknownStencilError"]

SUPPORTED = ("D2Q9", "D3Q15", "D3Q19", "D3Q27")


class UnknownStencilError(ValueError):
    pass


@dataclass(frozen=True)
class Stencil:
    name: str
    d: int
    directions: tuple
    weights: tuple
    cs2: Fraction = Fraction(1, 3)

    @property
    def q(self) -> int:
        return len(self.directions)

    @property
    def opposite(self) -> tuple:
        lookup = {c: i for i, c in enumerate(self.directions)}
        return tuple(lookup[tuple(-x for x in c)] for c in self.directions)

    def index_of(self, c) -> int:
        return self.directions.index(tuple(c))

    def opposite_pairs(self) -> list:
        """``(q, q̄)`` pairs with ``q < q̄``, in direction order."""
        opp = self.opposite
        return [(i, opp[i]) for i in range(self.q) if i < opp[i]]

    def check_isotropy(self) -> None:
        """Raise if the weights violate the moment conditions up to third order."""
        w, cs = self.weights, self.directions
        if sum(w) != 1:
            raise ValueError(f"{self.name}: weights sum to {sum(w)}")
        r = range(self.d)
        for i in r:
            if sum(wq * c[i] for wq, c in zip(w, cs)) != 0:
                raise ValueError(f"{self.name}: first moment nonzero")
            for j in r:
                m2 = sum(wq * c[i] * c[j] for wq, c in zip(w, cs))
                if m2 != (self.cs2 if i == j else 0):
                    raise ValueError(f"{self.name}: second moment ({i},{j}) = {m2}")
                for k in r:
                    if sum(wq * c[i] * c[j] * c[k] for wq, c in zip(w, cs)) != 0:
                        raise ValueError(f"{self.name}: third moment nonzero")


# weight per Manhattan length |c|_1
_WEIGHTS = {
    "D2Q9": (2, {0: Fraction(4, 9), 1: Fraction(1, 9), 2: Fraction(1, 36)}),
    "D3Q15": (3, {0: Fraction(2, 9), 1: Fraction(1, 9), 3: Fraction(1, 72)}),
    "D3Q19": (3, {0: Fraction(1, 3), 1: Fraction(1, 18), 2: Fraction(1, 36)}),
    "D3Q27": (3, {0: Fraction(8, 27), 1: Fraction(2, 27), 2: Fraction(1, 54), 3: Fraction(1, 216)}),
}


def _make(name: str) -> Stencil:
    d, wmap = _WEIGHTS[name]
    dirs = [c for c in itertools.product((-1, 0, 1), repeat=d)
            if sum(map(abs, c)) in wmap]
    dirs.sort(key=lambda c: (sum(map(abs, c)), c))
    weights = tuple(wmap[sum(map(abs, c))] for c in dirs)
    s = Stencil(name, d, tuple(dirs), weights)
    s.check_isotropy()
    return s


_CACHE = {}


def builtin(name: str) -> Stencil:
    key = name.upper() if isinstance(name, str) else name
    if key not in _WEIGHTS:
        raise UnknownStencilError(
            f"unknown stencil {name!r}; supported: {', '.join(SUPPORTED)}")
    s = _CACHE.get(key)
    if s is None:
        s = _CACHE[key] = _make(key)
    return s


def opposite_index(s: Stencil, q: int) -> int:
    if not 0 <= q < s.q:
        raise IndexError(f"direction {q} out of range for {s.name}")
    return s.opposite[q]
