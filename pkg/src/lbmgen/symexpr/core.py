"""Immutable expression nodes and their canonicalizing constructors.

Nodes are never built directly by client code.  The module level
functions :func:`add`, :func:`mul`, :func:`power`, :func:`sqrt` and
:func:`log` (and the arithmetic operators on :class:`Expr`) fold constants,
flatten nested sums/products, combine like terms and like bases, and sort
children by :func:`sort_key`, so structurally equal expressions compare
equal no matter how they were assembled.

A rational coefficient multiplying a single sum is distributed
(``2*(a + b) -> 2*a + 2*b``); products with more than one non-numeric
factor are left alone.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Integral, Rational as _RationalABC
from typing import Iterable, Mapping

__all__ = [
    "Expr", "Rational", "Symbol", "Indexed", "Add", "Mul", "Pow", "Sqrt", "Log",
    "add", "mul", "power", "sqrt", "log", "sympify", "symbols", "sort_key",
    "ZERO", "ONE", "NEG_ONE", "DomainError", "preorder", "free_symbols",
]


class DomainError(ValueError):
    """Raised for sqrt/log of a value outside their real domain."""


def sympify(x) -> "Expr":
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(x, (Integral, Fraction, _RationalABC)):
        return Rational(Fraction(x))
    if isinstance(x, float):
        # exact decimal reading of the shortest repr, e.g. 1.7857 -> 17857/10000
        return Rational(Fraction(repr(x)))
    if isinstance(x, str):
        return Rational(Fraction(x))
    raise TypeError(f"cannot convert {type(x).__name__} to an expression")


class Expr:
    __slots__ = ("_hash", "_key")
    rank = -1

    @property
    def args(self) -> tuple:
        return ()

    def rebuild(self, args) -> "Expr":
        return self

    # structural identity -------------------------------------------------
    def _hashable(self):
        raise NotImplementedError

    def __hash__(self):
        h = self._hash
        if h is None:
            h = self._hash = hash((self.rank, self._hashable()))
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            try:
                other = sympify(other)
            except TypeError:
                return NotImplemented
        if self.rank != other.rank or hash(self) != hash(other):
            return False
        return self._hashable() == other._hashable()

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def sort_key(self):
        k = self._key
        if k is None:
            k = self._key = self._compute_key()
        return k

    # arithmetic ----------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(-1, other))

    def __rsub__(self, other):
        return add(other, mul(-1, self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return mul(self, power(sympify(other), -1))

    def __rtruediv__(self, other):
        return mul(other, power(self, -1))

    def __neg__(self):
        return mul(-1, self)

    def __pos__(self):
        return self

    def __pow__(self, k):
        if isinstance(k, Rational) and k.value.denominator == 1:
            k = k.value.numerator
        if not isinstance(k, Integral):
            raise TypeError("only integer exponents are supported; use sqrt()")
        return power(self, int(k))

    def __repr__(self):
        from .printing import to_str
        return to_str(self)

    __str__ = __repr__

    # convenience ---------------------------------------------------------
    @property
    def is_number(self) -> bool:
        return False

    def atoms(self) -> set:
        return free_symbols(self)

    def has(self, *targets) -> bool:
        ts = set(targets)
        return any(n in ts for n in preorder(self))

    def subs(self, bindings: Mapping) -> "Expr":
        from .rewrite import substitute
        return substitute(self, bindings)

    def expand(self) -> "Expr":
        from .rewrite import expand
        return expand(self)


class Rational(Expr):
    __slots__ = ("value",)
    rank = 0

    def __init__(self, value: Fraction):
        self.value = value
        self._hash = None
        self._key = None

    def _hashable(self):
        return self.value

    def _compute_key(self):
        return (0, self.value)

    @property
    def is_number(self):
        return True

    @property
    def numerator(self) -> int:
        return self.value.numerator

    @property
    def denominator(self) -> int:
        return self.value.denominator

    def __float__(self):
        return float(self.value)

    def __lt__(self, other):
        return self.value < sympify(other).value

    def __gt__(self, other):
        return self.value > sympify(other).value


class Symbol(Expr):
    __slots__ = ("name",)
    rank = 1

    def __init__(self, name: str):
        if not isinstance(name, str) or not name:
            raise ValueError("symbol name must be a non-empty string")
        self.name = name
        self._hash = None
        self._key = None

    def _hashable(self):
        return self.name

    def _compute_key(self):
        return (1, self.name)


class Indexed(Expr):
    """Opaque leaf addressing ``name[offsets](index)``; used for field accesses."""

    __slots__ = ("name", "offsets", "index")
    rank = 2

    def __init__(self, name: str, offsets=(), index: int = 0):
        self.name = name
        self.offsets = tuple(int(o) for o in offsets)
        self.index = int(index)
        self._hash = None
        self._key = None

    def _hashable(self):
        return (self.name, self.offsets, self.index)

    def _compute_key(self):
        return (2, self.name, self.offsets, self.index)


class Pow(Expr):
    __slots__ = ("base", "exp")
    rank = 3

    def __init__(self, base: Expr, exp: int):
        self.base = base
        self.exp = exp
        self._hash = None
        self._key = None

    @property
    def args(self):
        return (self.base,)

    def rebuild(self, args):
        return power(args[0], self.exp)

    def _hashable(self):
        return (self.base, self.exp)

    def _compute_key(self):
        return (3, self.base.sort_key(), self.exp)


class Sqrt(Expr):
    __slots__ = ("arg",)
    rank = 4

    def __init__(self, arg: Expr):
        self.arg = arg
        self._hash = None
        self._key = None

    @property
    def args(self):
        return (self.arg,)

    def rebuild(self, args):
        return sqrt(args[0])

    def _hashable(self):
        return self.arg

    def _compute_key(self):
        return (4, self.arg.sort_key())


class Log(Expr):
    __slots__ = ("arg",)
    rank = 5

    def __init__(self, arg: Expr):
        self.arg = arg
        self._hash = None
        self._key = None

    @property
    def args(self):
        return (self.arg,)

    def rebuild(self, args):
        return log(args[0])

    def _hashable(self):
        return self.arg

    def _compute_key(self):
        return (5, self.arg.sort_key())


class _Nary(Expr):
    __slots__ = ("_args",)

    def __init__(self, args: tuple):
        self._args = args
        self._hash = None
        self._key = None

    @property
    def args(self):
        return self._args

    def _hashable(self):
        return self._args

    def _compute_key(self):
        return (self.rank, tuple(a.sort_key() for a in self._args))


class Mul(_Nary):
    """Product; a non-unit rational coefficient, if any, is ``args[0]``."""

    __slots__ = ()
    rank = 6

    def rebuild(self, args):
        return mul(*args)

    def as_coeff_rest(self):
        a0 = self._args[0]
        if isinstance(a0, Rational):
            rest = self._args[1:]
            return a0.value, (rest[0] if len(rest) == 1 else Mul(rest))
        return Fraction(1), self


class Add(_Nary):
    """Sum; a nonzero rational constant, if any, is ``args[0]``."""

    __slots__ = ()
    rank = 7

    def rebuild(self, args):
        return add(*args)


ZERO = Rational(Fraction(0))
ONE = Rational(Fraction(1))
NEG_ONE = Rational(Fraction(-1))


def sort_key(e: Expr):
    return e.sort_key()


def symbols(names: str | Iterable[str]) -> tuple:
    if isinstance(names, str):
        names = names.replace(",", " ").split()
    return tuple(Symbol(n) for n in names)


def _coeff_rest(t: Expr):
    if isinstance(t, Mul):
        return t.as_coeff_rest()
    return Fraction(1), t


def _with_coeff(c: Fraction, rest: Expr) -> Expr:
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((Rational(c),) + rest.args)
    if isinstance(rest, Add):
        return add(*[_with_coeff(c * cc, r) for cc, r in map(_coeff_rest, rest.args)])
    return Mul((Rational(c), rest))


def add(*args) -> Expr:
    const = Fraction(0)
    terms: dict = {}
    stack = [sympify(a) for a in args]
    stack.reverse()
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(reversed(t.args))
            continue
        if isinstance(t, Rational):
            const += t.value
            continue
        c, rest = _coeff_rest(t)
        if rest in terms:
            terms[rest] += c
        else:
            terms[rest] = c
    out = [_with_coeff(c, r) for r, c in terms.items() if c != 0]
    if not out:
        return Rational(const)
    if const == 0 and len(out) == 1:
        return out[0]
    out.sort(key=sort_key)
    if const != 0:
        out.insert(0, Rational(const))
    return Add(tuple(out))


def mul(*args) -> Expr:
    coeff = Fraction(1)
    bases: dict = {}
    stack = [sympify(a) for a in args]
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(f.args)
            continue
        if isinstance(f, Rational):
            coeff *= f.value
            if coeff == 0:
                return ZERO
            continue
        if isinstance(f, Pow):
            b, k = f.base, f.exp
        else:
            b, k = f, 1
        bases[b] = bases.get(b, 0) + k
    # sqrt(x)**2 -> x
    for b in [b for b in bases if isinstance(b, Sqrt) and abs(bases[b]) >= 2]:
        k = bases[b]
        q, r = divmod(k, 2) if k > 0 else (-((-k) // 2), -((-k) % 2))
        bases[b] = r
        inner = b.arg
        if isinstance(inner, Rational):
            coeff *= inner.value ** q
        else:
            bases[inner] = bases.get(inner, 0) + q
    factors = []
    for b, k in bases.items():
        if k == 0:
            continue
        f = power(b, k)
        if isinstance(f, Rational):
            coeff *= f.value
        elif isinstance(f, Mul):
            c2, rest = f.as_coeff_rest()
            coeff *= c2
            factors.extend(rest.args if isinstance(rest, Mul) else (rest,))
        else:
            factors.append(f)
    if coeff == 0:
        return ZERO
    if not factors:
        return Rational(coeff)
    if len(factors) == 1:
        f = factors[0]
        if coeff == 1:
            return f
        if isinstance(f, Add):
            return _with_coeff(coeff, f)
        return Mul((Rational(coeff), f))
    factors.sort(key=sort_key)
    if coeff != 1:
        return Mul((Rational(coeff),) + tuple(factors))
    return Mul(tuple(factors))


def power(base, k: int) -> Expr:
    base = sympify(base)
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Rational):
        if base.value == 0 and k < 0:
            raise ZeroDivisionError("division by zero")
        return Rational(base.value ** k)
    if isinstance(base, Pow):
        return power(base.base, base.exp * k)
    if isinstance(base, Mul):
        return mul(*[power(f, k) for f in base.args])
    if isinstance(base, Sqrt):
        if k % 2 == 0:
            return power(base.arg, k // 2)
        return mul(power(base.arg, (k - 1) // 2), base)
    return Pow(base, k)


def _rational_sqrt(v: Fraction):
    from math import isqrt
    n, d = v.numerator, v.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def sqrt(x) -> Expr:
    x = sympify(x)
    if isinstance(x, Rational):
        if x.value < 0:
            raise DomainError(f"sqrt of negative constant {x.value}")
        r = _rational_sqrt(x.value)
        if r is not None:
            return Rational(r)
    return Sqrt(x)


def log(x) -> Expr:
    x = sympify(x)
    if isinstance(x, Rational):
        if x.value <= 0:
            raise DomainError(f"log of non-positive constant {x.value}")
        if x.value == 1:
            return ZERO
    return Log(x)


def preorder(e: Expr):
    """Yield every node of the tree, parents before children (with repeats)."""
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.args))


def free_symbols(*exprs: Expr) -> set:
    out = set()
    seen = set()
    stack = list(exprs)
    while stack:
        n = stack.pop()
        if isinstance(n, (Symbol, Indexed)):
            out.add(n)
            continue
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.extend(n.args)
    return out
