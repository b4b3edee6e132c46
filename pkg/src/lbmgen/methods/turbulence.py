"""Shear viscosity relation and the Smagorinsky adaptive rate."""

from __future__ import annotations

from fractions import Fraction

from ..equilibria import RHO, gaussian_raw_moment, pdf_symbols, truncate_velocity_order, velocity_symbols
from ..symexpr import (
    ONE, Expr, Symbol, add, is_zero, mul, power, sqrt, sympify,
)
from .spec import MethodSpec

__all__ = [
    "viscosity_from_rate", "rate_from_viscosity", "second_nonequilibrium_moments",
    "smagorinsky_rate", "smagorinsky_identity", "create_smagorinsky_srt",
]


def viscosity_from_rate(omega, cs2=Fraction(1, 3)) -> Expr:
    omega = sympify(omega)
    if omega == 0:
        raise ZeroDivisionError("relaxation rate must be nonzero")
    return mul(cs2, add(power(omega, -1), Fraction(-1, 2)))


def rate_from_viscosity(nu, cs2=Fraction(1, 3)) -> Expr:
    """Inverse relation, ``1/(nu/cs2 + 1/2)`` (``1/(3 nu + 1/2)`` for cs2 = 1/3)."""
    return power(add(mul(1 / Fraction(cs2), sympify(nu)), Fraction(1, 2)), -1)


def second_nonequilibrium_moments(m: MethodSpec, f=None) -> dict:
    """``Pi_ij = sum_q c_qi c_qj (f_q - f_eq_q)`` keyed by ``(i, j)``, ``i <= j``."""
    s = m.stencil
    f = f or pdf_symbols(s.q)
    spec = m.equilibrium_spec
    u = velocity_symbols(s.d)
    out = {}
    for i in range(s.d):
        for j in range(i, s.d):
            e = [0] * s.d
            e[i] += 1
            e[j] += 1
            raw = add(*[mul(c[i] * c[j], fq) for c, fq in zip(s.directions, f)])
            eq = truncate_velocity_order(gaussian_raw_moment(e, spec), u, spec.truncation_order)
            if not spec.compressible:
                from ..equilibria import _incompressible
                eq = _incompressible(eq, u)
            out[(i, j)] = add(raw, mul(-1, eq))
    return out


def smagorinsky_rate(nu0_or_omega0, cs_const, m: MethodSpec, given_rate: bool = False) -> Expr:
    """Closed-form solution of the coupled strain-rate / total-viscosity system.

    With ``|S| = omega * K`` and ``K = 3 sqrt(2 Pi:Pi) / (2 rho0)`` the rate
    equation ``omega (6 C^2 K omega + 6 nu0 + 1) = 2`` is a quadratic whose
    positive root is ``4 / (b + sqrt(b^2 + 8 a))``, ``a = 6 C^2 K``,
    ``b = 6 nu0 + 1``.  ``given_rate`` interprets the first argument as the
    laminar relaxation rate instead of the laminar viscosity.
    """
    base = sympify(nu0_or_omega0)
    nu0 = mul(Fraction(1, 3), add(power(base, -1), Fraction(-1, 2))) if given_rate else base
    pi = second_nonequilibrium_moments(m)
    sq = add(*[mul(1 if i == j else 2, power(v, 2)) for (i, j), v in pi.items()])
    rho0 = RHO if m.compressible else ONE
    k = mul(Fraction(3, 2), sqrt(mul(2, sq)), power(rho0, -1))
    return smagorinsky_closed_form(nu0, cs_const, k)


def smagorinsky_closed_form(nu0, cs_const, k) -> Expr:
    a = mul(6, power(sympify(cs_const), 2), k)
    b = add(mul(6, nu0), 1)
    return mul(4, power(add(b, sqrt(add(power(b, 2), mul(8, a)))), -1))


def smagorinsky_identity() -> bool:
    """Back-substitute the closed form into ``omega = 2/(6 C^2 |S| + 6 nu0 + 1)``."""
    nu0, c, k = Symbol("nu_0"), Symbol("C_S"), Symbol("K")
    omega = smagorinsky_closed_form(nu0, c, k)
    strain = mul(omega, k)
    residual = add(mul(omega, add(mul(6, power(c, 2), strain), mul(6, nu0), 1)), -2)
    return is_zero(residual)


def create_smagorinsky_srt(s, nu0, cs_const, eq_spec=None, base: str = "srt") -> MethodSpec:
    """SRT (or TRT with both rates adapted) whose rate follows the Smagorinsky model."""
    from .spec import create_srt, create_trt
    omega = Symbol("omega")
    if base == "trt":
        m = create_trt(s, omega, omega, eq_spec)
    else:
        m = create_srt(s, omega, eq_spec)
    rate = smagorinsky_rate(nu0, cs_const, m)
    return m.with_rates([rate] * s.q)
