"""Acceptance suite: one test per criterion, summarized at the end of the run."""

import itertools
import math
from pathlib import Path

import numpy as np

from conftest import equilibrium_values, normwise_error, random_states
from lbmgen.equilibria import (
    RHO, EquilibriumSpec, continuous_equilibrium_moments, discrete_equilibrium, velocity_symbols,
)
from lbmgen.kernel import (
    UBB, BoundaryMode, Field, NoSlip, StreamingPattern, compile_kernel, emit, find_compiler,
    load_kernel, lower,
)
from lbmgen.lattice import builtin
from lbmgen.methods import (
    OMEGA_S, assemble_collision_rule, create_cumulant, create_kbc, create_mrt,
    create_smagorinsky_srt, create_srt, create_trt, cumulant_roundtrip_rule, kbc_higher_rate,
    kbc_partition, newton_entropy_maximize, raw_moments_to_cumulants, smagorinsky_identity,
)
from lbmgen.moments import MomentPoly, build_basis, default_monomial_basis, gram_schmidt, \
    split_shear_bulk
from lbmgen.refsim import (
    Simulation, WallSpec, allocate, couette, couette_deviation, fit_viscosity, run, taylor_green,
)
from lbmgen.simplify import Strategy, run_strategy, select_best
from lbmgen.symexpr import (
    Assignment, Rational, Symbol, add, compile_assignments, eval_f64, inline_all, is_zero, mul,
    parse_expr, symbols,
)

W = Symbol("omega")
WE, WO = symbols("omega_e omega_o")
U = velocity_symbols(3)
DATA = Path(__file__).parent / "data"
PARAMS = {"omega": 1.45, "omega_e": 1.3, "omega_o": 1.7, "nu_0": 0.01, "C_S": 0.14,
          "omega_s": 1.6}
CUSTOM = (Strategy.CUSTOM_DIRECTION, Strategy.CUSTOM_DEFAULT)


def sub(a, b):
    return add(a, mul(-1, b))


def totals(rule):
    out = {Strategy.ONLY_CSE: run_strategy(rule, Strategy.ONLY_CSE)[1].final.total}
    for st in CUSTOM:
        out[st] = run_strategy(rule, st)[1].final.total
    return out


def check(failures, ok, message):
    if not ok:
        failures.append(message)


# -- 1

def test_criterion_01_flop_bands():
    rule = assemble_collision_rule(create_srt(builtin("D3Q19"), W, EquilibriumSpec(continuous=False)))
    initial = rule.flops().total
    t = totals(rule)
    only, custom = t[Strategy.ONLY_CSE], min(t[s] for s in CUSTOM)
    print(f"\n  D3Q19 SRT: initial {initial}, only-cse {only}, best custom {custom}")
    failures = []
    check(failures, abs(initial - 1263) <= 0.15 * 1263, f"initial {initial}")
    check(failures, only <= 320, f"only-cse {only}")
    check(failures, custom <= 230, f"custom {custom}")
    check(failures, custom <= 0.8 * only, f"custom {custom} not 20% below {only}")
    assert not failures, failures


# -- 2

def table_two_rules(name):
    s = builtin(name)
    comp = EquilibriumSpec(continuous=False)
    incomp = EquilibriumSpec(compressible=False, continuous=False)
    mrt = {"shear": W, "bulk": Symbol("omega_b"), 3: Symbol("omega_3"), 4: Symbol("omega_4")}
    custom_wins = {
        f"{name} SRT compr.": create_srt(s, W, comp),
        f"{name} SRT incompr.": create_srt(s, W, incomp),
        f"{name} TRT compr.": create_trt(s, WE, WO, comp),
        f"{name} TRT incompr.": create_trt(s, WE, WO, incomp),
        f"{name} Smagorinsky compr.": create_smagorinsky_srt(s, Symbol("nu_0"), Symbol("C_S"), comp),
        f"{name} Smagorinsky incompr.": create_smagorinsky_srt(s, Symbol("nu_0"), Symbol("C_S"),
                                                               incomp),
    }
    cse_wins = {
        f"{name} MRT weighted": create_mrt(s, mrt, True, comp),
        f"{name} MRT unweighted": create_mrt(s, mrt, False, comp),
        f"{name} MRT weighted incompr.": create_mrt(s, mrt, True, incomp),
    }
    return custom_wins, cse_wins


def test_criterion_02_strategy_ordering():
    failures = []
    for name in ("D2Q9", "D3Q19"):
        custom_wins, cse_wins = table_two_rules(name)
        for label, m in list(custom_wins.items()) + list(cse_wins.items()):
            t = totals(assemble_collision_rule(m))
            only, custom = t[Strategy.ONLY_CSE], min(t[s] for s in CUSTOM)
            print(f"\n  {label}: only-cse {only}, best custom {custom}", end="")
            if label in custom_wins:
                check(failures, custom <= only, f"{label}: custom {custom} > only-cse {only}")
            else:
                check(failures, only <= custom, f"{label}: only-cse {only} > custom {custom}")
    print()
    assert not failures, failures


# -- 3

SOUNDNESS = {
    "SRT": lambda s: create_srt(s, W),
    "TRT": lambda s: create_trt(s, WE, WO),
    "MRT-weighted": lambda s: create_mrt(s, {"shear": W, "bulk": 1.1, 3: 1.2, 4: 1.3}, True),
    "MRT-unweighted": lambda s: create_mrt(s, {"shear": W, "bulk": 1.1, 3: 1.2, 4: 1.3}, False),
    "cumulant": lambda s: create_cumulant(s, {"shear": W, "bulk": 1, 3: 1, 4: 1}),
    "Smagorinsky-SRT": lambda s: create_smagorinsky_srt(s, Symbol("nu_0"), Symbol("C_S")),
    "KBC-closed-form": lambda s: create_kbc(s),
}


def test_criterion_03_simplification_soundness():
    failures = []
    for name in ("D2Q9", "D3Q19"):
        s = builtin(name)
        f = random_states(s, 1000, np.random.default_rng(11)).T
        for label, make in SOUNDNESS.items():
            rule = assemble_collision_rule(make(s))
            best, _ = select_best(rule)
            err = normwise_error(rule.evaluate(f, PARAMS).T, best.evaluate(f, PARAMS).T)
            check(failures, err <= 1e-12, f"{name} {label}: {err:.2e}")
    assert not failures, failures


# -- 4

MOMENT_SPACE = {
    "SRT": lambda s, eq: create_srt(s, W, eq),
    "TRT": lambda s, eq: create_trt(s, WE, WO, eq),
    "MRT-weighted": lambda s, eq: create_mrt(s, {"shear": W, "bulk": 1.1, 3: 1.2, 4: 1.3}, True, eq),
    "MRT-unweighted": lambda s, eq: create_mrt(s, {"shear": W, "bulk": 1.1, 3: 1.2, 4: 1.3}, False,
                                               eq),
    "Smagorinsky-SRT": lambda s, eq: create_smagorinsky_srt(s, Symbol("nu_0"), Symbol("C_S"), eq),
}


def test_criterion_04_conservation():
    failures = []
    for name in ("D2Q9", "D3Q19"):
        s = builtin(name)
        for comp in (True, False):
            for label, make in MOMENT_SPACE.items():
                rule = assemble_collision_rule(make(s, EquilibriumSpec(compressible=comp)))
                post = [a.value for a in rule.inlined_mains()]
                ok = is_zero(sub(add(*post), add(*rule.pre)))
                rho0 = rule.density if comp else Rational(1)
                for i, ui in enumerate(rule.velocity):
                    want = inline_all(rule.subexpressions,
                                      [Assignment(Symbol("m"), mul(rho0, ui))])[0].value
                    mom = add(*[mul(c[i], p) for c, p in zip(s.directions, post)])
                    ok = ok and is_zero(sub(mom, want))
                check(failures, ok, f"{name} {label} compressible={comp}")
        c = np.array(s.directions, dtype=float)
        f = random_states(s, 100, np.random.default_rng(5))
        for label, m in (("cumulant", create_cumulant(s, {"shear": W, "bulk": 1, 3: 1, 4: 1})),
                         ("KBC", create_kbc(s))):
            post = assemble_collision_rule(m).evaluate(f.T, PARAMS).T
            err = max(np.abs(post.sum(1) - f.sum(1)).max(), np.abs(post @ c - f @ c).max())
            check(failures, err <= 1e-13, f"{name} {label}: {err:.2e}")
    assert not failures, failures


# -- 5

def expr(text):
    return parse_expr(text, {"rho": RHO, "u_0": U[0], "u_1": U[1]})


TRT_TABLE = [
    ("1", "rho", WE), ("x", "rho*u_0", WO), ("y", "rho*u_1", WO),
    ("x**2", "rho/3 + rho*u_0**2", WE), ("y**2", "rho/3 + rho*u_1**2", WE),
    ("x*y", "rho*u_0*u_1", WE), ("x**2*y", "rho*u_1/3", WO), ("x*y**2", "rho*u_0/3", WO),
    ("x**2*y**2", "rho/9 + rho*u_0**2/3 + rho*u_1**2/3", WE),
]
MRT_POLYS = ["x**2 - y**2", "x*y", "3*x**2 + 3*y**2 - 2", "3*x**2*y - y", "3*x*y**2 - x",
             "9*x**2*y**2 - 3*x**2 - 3*y**2 + 1"]


def test_criterion_05_tableaus():
    s = builtin("D2Q9")
    m = create_trt(s, WE, WO)
    assert len(m.entries) == len(TRT_TABLE)
    for e, (poly, eq, rate) in zip(m.entries, TRT_TABLE):
        assert e.basis_entry == MomentPoly.parse(poly, 2)
        assert is_zero(sub(e.equilibrium, expr(eq)))
        assert e.rate == rate
    basis = gram_schmidt(split_shear_bulk(default_monomial_basis(s)), s, weighted=True)
    for poly in MRT_POLYS:
        assert MomentPoly.parse(poly, 2) in basis


# -- 6

def equilibrium_difference(name):
    s = builtin(name)
    spec = EquilibriumSpec()
    b = build_basis(default_monomial_basis(s), s)
    moments = continuous_equilibrium_moments(b, spec)
    out = []
    for row, e in zip(b.M_inverse, discrete_equilibrium(s, spec)):
        out.append(sub(add(*[mul(Rational(c), m) for c, m in zip(row, moments)]), e))
    return out


def test_criterion_06_equilibrium_identity():
    for name in ("D2Q9", "D3Q27"):
        assert all(is_zero(d) for d in equilibrium_difference(name)), name
    assert not all(is_zero(d) for d in equilibrium_difference("D3Q19"))


# -- 7

def log_mgf_derivative(f, c, exps, h=1e-2):
    """Mixed derivative of ln sum_q f_q exp(xi . c_q) at 0 by a tensor-product
    fourth-order central difference."""
    stencils = [{0: 1.0},
                {-2: 1 / 12, -1: -8 / 12, 1: 8 / 12, 2: -1 / 12},
                {-2: -1 / 12, -1: 16 / 12, 0: -30 / 12, 1: 16 / 12, 2: -1 / 12}]
    total = 0.0
    for taps in itertools.product(*[stencils[e].items() for e in exps]):
        xi = np.array([k * h for k, _ in taps])
        weight = math.prod(w for _, w in taps)
        total += weight * math.log(float(np.sum(f * np.exp(c @ xi))))
    return total / h ** sum(exps)


def test_criterion_07_cumulants():
    failures = []
    for name in ("D2Q9", "D3Q19"):
        s = builtin(name)
        rule = cumulant_roundtrip_rule(create_cumulant(s, {"shear": W, "bulk": 1, 3: 1, 4: 1}))
        f = random_states(s, 100, np.random.default_rng(21))
        err = normwise_error(f, rule.evaluate(f.T, {}).T)
        check(failures, err <= 1e-12, f"{name} round trip {err:.2e}")
    s = builtin("D2Q9")
    c = np.array(s.directions, dtype=float)
    idx = [(a, b) for a in range(3) for b in range(3)]
    msym = {e: Symbol(f"m_{e[0]}{e[1]}") for e in idx}
    kappa = raw_moments_to_cumulants(msym)
    worst = 0.0
    for f in random_states(s, 20, np.random.default_rng(8)):
        vals = {msym[e]: float(np.sum(f * c[:, 0] ** e[0] * c[:, 1] ** e[1])) for e in idx}
        for e in idx:
            if e == (0, 0):
                continue
            worst = max(worst, abs(eval_f64(kappa[e], vals) - log_mgf_derivative(f, c, e)))
    print(f"\n  cumulant vs log-MGF finite differences: max abs error {worst:.2e}")
    check(failures, worst <= 1e-6, f"log-MGF oracle {worst:.2e}")
    assert not failures, failures


# -- 8

def test_criterion_08_kbc_and_smagorinsky():
    s = builtin("D2Q9")
    failures = []
    m = create_kbc(s, closed_form=False)
    rate = kbc_higher_rate(m, kbc_partition(m.polys), OMEGA_S)
    check(failures, is_zero(sub(rate.subs({OMEGA_S: Rational(1)}), Rational(1))),
          "omega_s = 1 does not give omega_h = 1")
    check(failures, smagorinsky_identity(), "Smagorinsky back-substitution")
    probe = assemble_collision_rule(m)
    closed = assemble_collision_rule(create_kbc(s))
    target = next(a.target for a in closed.subexpressions if a.target in closed.rate_symbols)
    fn = compile_assignments(list(closed.subexpressions), list(closed.pre) + closed.parameters,
                             [target])
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        feq = equilibrium_values(s, 1 + 0.1 * rng.random(), 0.05 * rng.standard_normal(2))
        f = feq * (1 + 1e-3 * rng.standard_normal(9))
        wc = fn(*f, 1.7)[0]
        wn = newton_entropy_maximize(probe, f, 1.7)
        worst = max(worst, abs(wc - wn))
    print(f"\n  KBC closed form vs Newton, perturbation 1e-3: max |diff| {worst:.2e}")
    check(failures, worst <= 1e-6, f"closed form vs Newton {worst:.2e} > 1e-6")
    assert not failures, failures


# -- 9

def evolve(rule, family, f0, steps, params, **kw):
    sim = Simulation(rule, f0.shape[:-1], family, params=params, **kw)
    sim.set_populations(f0)
    sim.step(steps)
    return sim.populations()


def channel(rule, family, mode, shape=(32, 32), steps=20, **kw):
    s = rule.stencil
    walls = [WallSpec(NoSlip(), (slice(None), 0)), WallSpec(UBB((0.05, 0), "lid"), (slice(None), -1))]
    sim = Simulation(rule, shape, family, periodic=(True, False), walls=walls, boundary_mode=mode,
                     params={"omega": 1.4}, **kw)
    rng = np.random.default_rng(2)
    f0 = np.array([float(w) for w in s.weights]) * (1 + 0.05 * rng.standard_normal(shape + (s.q,)))
    sim.set_populations(f0)
    sim.step(steps)
    return sim.populations()


def test_criterion_09_streaming_patterns():
    failures = []
    n_pairs = 3
    d3 = builtin("D3Q19")
    cases = [
        ("D3Q19 SRT", select_best(assemble_collision_rule(create_srt(d3, W)))[0], (16, 16, 16)),
        ("D3Q19 MRT", select_best(assemble_collision_rule(
            create_mrt(d3, {"shear": W, "bulk": 1.1, 3: 1.2, 4: 1.3})))[0], (16, 16, 16)),
        ("D2Q9 SRT", select_best(assemble_collision_rule(create_srt(builtin("D2Q9"), W)))[0],
         (32, 32)),
    ]
    for label, rule, shape in cases:
        s = rule.stencil
        rng = np.random.default_rng(4)
        f0 = np.array([float(w) for w in s.weights]) * (1 + 0.05 * rng.standard_normal(shape + (s.q,)))
        ref = evolve(rule, "pull", f0, 2 * n_pairs, {"omega": 1.4})
        for fam in ("aa", "eso"):
            err = np.abs(evolve(rule, fam, f0, 2 * n_pairs, {"omega": 1.4}) - ref).max()
            check(failures, err <= 1e-11, f"{label} {fam}: {err:.2e}")
            err = np.abs(evolve(rule, fam, f0, 2 * n_pairs, {"omega": 1.4}, split_block=8)
                         - evolve(rule, fam, f0, 2 * n_pairs, {"omega": 1.4})).max()
            check(failures, err <= 1e-13, f"{label} {fam} split: {err:.2e}")
        err = np.abs(evolve(rule, "pull", f0, 2 * n_pairs, {"omega": 1.4}, split_block=8) - ref).max()
        check(failures, err <= 1e-13, f"{label} pull split: {err:.2e}")
    rule = cases[2][1]
    for fam in ("pull", "aa", "eso"):
        ref = channel(rule, fam, BoundaryMode.INDEX_LIST)
        err = np.abs(channel(rule, fam, BoundaryMode.COMPILED_IN) - ref).max()
        check(failures, err <= 1e-13, f"compiled-in {fam}: {err:.2e}")
    assert not failures, failures


# -- 10

def test_criterion_10_physics():
    failures = []
    d2q9 = builtin("D2Q9")
    rule, _ = select_best(assemble_collision_rule(create_srt(d2q9, W)))
    drift = []

    def mass_drift(series):
        mass = series.column("mass")
        return float(np.abs(mass - mass[0]).max() / mass[0])

    for omega in (1.2, 1.7857):
        sc = taylor_green(rule, {"omega": omega}, n=32, steps=2000)
        series = run(sc)
        nu = fit_viscosity(series, sc.info["k"])
        want = (1 / omega - 0.5) / 3
        print(f"\n  Taylor-Green omega {omega}: nu {nu:.6g} (expected {want:.6g})", end="")
        check(failures, abs(nu / want - 1) <= 0.02, f"Taylor-Green omega={omega}: nu {nu:.4g}")
        drift.append(mass_drift(series))
    for fam in ("pull", "aa"):
        for mode in (BoundaryMode.INDEX_LIST, BoundaryMode.FULL_FIELD_FLAG):
            series = run(couette(rule, {"omega": 1.0}, n=32, lid=0.05, pattern=fam,
                                 boundary_mode=mode))
            dev = couette_deviation(series, 0.05)
            print(f"\n  Couette {fam}/{mode.value}: deviation {dev:.2e}, steady at "
                  f"{series.steady_step}", end="")
            check(failures, series.steady_step is not None and dev <= 1e-6,
                  f"Couette {fam} {mode.value}: {dev:.2e}")
            drift.append(mass_drift(series))
    long_run = run(taylor_green(rule, {"omega": 1.7857}, n=32, steps=10000, sample_every=1000,
                                snapshot_every=None))
    drift.append(mass_drift(long_run))
    print(f"\n  worst relative mass drift {max(drift):.2e}")
    check(failures, max(drift) <= 1e-11, f"mass drift {max(drift):.2e}")
    assert not failures, failures


# -- 11

def test_criterion_11_emission():
    rule, _ = select_best(assemble_collision_rule(create_trt(builtin("D2Q9"), WE, WO)))
    src, dst = Field("src", 2, 9), Field("dst", 2, 9)
    k = lower(rule, StreamingPattern.TWO_ARRAY_PULL, src, dst)
    source = emit(k).source
    if find_compiler() is None:
        assert source == (DATA / "trt_d2q9_pull.c").read_text()
        return
    rng = np.random.default_rng(16)
    a = {"src": allocate(src, (18, 18)), "dst": allocate(dst, (18, 18))}
    # random 16 x 16 interior plus the ghost layer
    a["src"][...] = rng.uniform(0.01, 0.2, a["src"].shape)
    b = {n: v.copy() for n, v in a.items()}
    p = {"omega_e": 1.3, "omega_o": 1.7}
    compile_kernel(k)(a, p)
    load_kernel(k)(b, p)
    err = np.abs(a["dst"] - b["dst"]).max() / np.abs(a["dst"]).max()
    print(f"\n  C kernel vs interpreter: relative max difference {err:.2e}")
    assert err <= 1e-12
    assert source == (DATA / "trt_d2q9_pull.c").read_text()
