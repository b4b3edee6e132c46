"""Exact symbolic expressions over rationals, symbols and field accesses."""

from .assign import Assignment, fresh_symbols, inline_all, topological_sort
from .core import (
    NEG_ONE, ONE, ZERO, Add, DomainError, Expr, Indexed, Log, Mul, Pow, Rational,
    Sqrt, Symbol, add, free_symbols, log, mul, power, preorder, sort_key, sqrt,
    symbols, sympify,
)
from .cse import cse, global_cse
from .evaluate import PythonPrinter, UnboundSymbolError, compile_assignments, eval_f64
from .flops import FlopCount, count_expr, count_flops
from .parse import ParseError, parse_expr
from .printing import to_str
from .rewrite import (
    as_poly_terms, cancel_equal, collect, differentiate, expand, from_poly_terms, is_zero,
    numer_denom, substitute,
)
