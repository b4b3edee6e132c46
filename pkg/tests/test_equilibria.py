import math
from fractions import Fraction

import numpy as np
import pytest

from lbmgen.equilibria import (
    RHO, EquilibriumSpec, continuous_equilibrium_moments, density_velocity_assignments,
    discrete_equilibrium, gaussian_raw_moment, macroscopic_values, pdf_symbols, velocity_symbols,
)
from lbmgen.lattice import SUPPORTED, builtin
from lbmgen.moments import MomentPoly, build_basis, default_monomial_basis, discrete_moment
from lbmgen.symexpr import (
    Assignment, Rational, Symbol, add, count_flops, eval_f64, is_zero, mul, power,
)

U = velocity_symbols(3)
THIRD = Rational(Fraction(1, 3))


def P(text, d=2):
    return MomentPoly.parse(text, d)


def sub(a, b):
    return add(a, mul(-1, b))


def gauss_oracle(n, u, cs2=1 / 3):
    """n-th raw moment of N(u, cs2) by numerical quadrature."""
    x = np.linspace(u - 12, u + 12, 20001)
    g = np.exp(-(x - u) ** 2 / (2 * cs2)) / math.sqrt(2 * math.pi * cs2)
    return np.trapezoid(x ** n * g, x)


# -- Gaussian raw moments

def test_gaussian_examples():
    spec = EquilibriumSpec()
    assert gaussian_raw_moment((0, 0), spec) == RHO
    assert gaussian_raw_moment((1, 0), spec) == mul(RHO, U[0])
    assert is_zero(sub(gaussian_raw_moment((2, 0), spec),
                       add(mul(RHO, power(U[0], 2)), mul(THIRD, RHO))))


@pytest.mark.parametrize("exps", [(3, 0), (4, 0), (2, 2), (1, 3), (4, 2)])
def test_gaussian_against_quadrature(exps):
    u = (0.13, -0.21)
    rho = 1.2
    want = rho * gauss_oracle(exps[0], u[0]) * gauss_oracle(exps[1], u[1])
    got = eval_f64(gaussian_raw_moment(exps, EquilibriumSpec()), {RHO: rho, U[0]: u[0], U[1]: u[1]})
    assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


# -- continuous equilibrium moments

def d2q9_basis():
    s = builtin("D2Q9")
    return build_basis(default_monomial_basis(s), s)


def test_x2y2_equilibrium_at_order_two():
    b = d2q9_basis()
    eq = continuous_equilibrium_moments(b, EquilibriumSpec())
    i = b.polys.index(P("x**2*y**2"))
    want = add(mul(THIRD, RHO, power(U[0], 2)), mul(THIRD, RHO, power(U[1], 2)),
               mul(Rational(Fraction(1, 9)), RHO))
    assert is_zero(sub(eq[i], want))


def test_incompressible_substitution():
    b = d2q9_basis()
    eq = continuous_equilibrium_moments(b, EquilibriumSpec(compressible=False))
    assert eq[b.polys.index(P("1"))] == RHO
    assert eq[b.polys.index(P("x"))] == U[0]
    assert is_zero(sub(eq[b.polys.index(P("x**2"))], add(power(U[0], 2), mul(THIRD, RHO))))


def test_zeroth_moment_is_rho_in_both_variants():
    b = d2q9_basis()
    for comp in (True, False):
        assert continuous_equilibrium_moments(b, EquilibriumSpec(compressible=comp))[0] == RHO


# -- discrete equilibrium

@pytest.mark.parametrize("order", [1, 2, 3])
@pytest.mark.parametrize("name", SUPPORTED)
def test_rest_state_and_conservation(name, order):
    s = builtin(name)
    for comp in (True, False):
        spec = EquilibriumSpec(compressible=comp, truncation_order=order)
        feq = discrete_equilibrium(s, spec)
        rest = {u: Rational(0) for u in U[:s.d]}
        for w, e in zip(s.weights, feq):
            assert is_zero(sub(e.subs(rest), mul(Rational(w), RHO)))
        assert is_zero(sub(add(*feq), RHO))
        rho0 = RHO if comp else Rational(1)
        for i in range(s.d):
            mom = add(*[mul(c[i], e) for c, e in zip(s.directions, feq)])
            assert is_zero(sub(mom, mul(rho0, U[i])))


def test_truncation_order_four_rejected(d2q9):
    with pytest.raises(ValueError):
        discrete_equilibrium(d2q9, EquilibriumSpec(truncation_order=4))


def moment_matching_difference(name, order):
    s = builtin(name)
    spec = EquilibriumSpec(truncation_order=order)
    b = build_basis(default_monomial_basis(s), s)
    m_cont = continuous_equilibrium_moments(b, spec)
    feq = discrete_equilibrium(s, spec)
    # population space: M^-1 m_cont against the discrete formula
    diffs = []
    for row, e in zip(b.M_inverse, feq):
        f_cont = add(*[mul(Rational(c), m) for c, m in zip(row, m_cont)])
        diffs.append(sub(f_cont, e))
    return diffs


@pytest.mark.parametrize("name", ["D2Q9", "D3Q27"])
@pytest.mark.parametrize("order", [2, 3])
def test_moment_matching_identity(name, order):
    assert all(is_zero(d) for d in moment_matching_difference(name, order))


@pytest.mark.parametrize("name", ["D3Q15", "D3Q19"])
def test_moment_matching_differs_on_reduced_stencils(name):
    assert not all(is_zero(d) for d in moment_matching_difference(name, 2))


def test_discrete_moments_of_equilibrium_d2q9(d2q9):
    spec = EquilibriumSpec()
    b = d2q9_basis()
    feq = discrete_equilibrium(d2q9, spec)
    for p, m in zip(b.polys, continuous_equilibrium_moments(b, spec)):
        assert is_zero(sub(discrete_moment(p, d2q9, feq), m))


# -- macroscopic values

def divisions(exprs):
    return count_flops([Assignment(Symbol(f"t{i}"), e) for i, e in enumerate(exprs)]).divs


def test_compressible_velocity_has_one_division(d3q19):
    rho, u = macroscopic_values(d3q19, EquilibriumSpec())
    assert all(divisions([ui]) == 1 for ui in u)
    assigns = density_velocity_assignments(d3q19, EquilibriumSpec())
    assert count_flops(assigns).divs == 3   # one reciprocal density per component
    rho, u = macroscopic_values(d3q19, EquilibriumSpec(compressible=False))
    assert divisions(u) == 0


def test_macroscopic_values_of_weights(d2q9):
    rho, u = macroscopic_values(d2q9, EquilibriumSpec())
    b = {f: float(w) for f, w in zip(pdf_symbols(9), d2q9.weights)}
    assert eval_f64(rho, b) == pytest.approx(1.0, abs=1e-15)
    assert all(abs(eval_f64(ui, b)) < 1e-15 for ui in u)
