from pathlib import Path

import numpy as np
import pytest

from lbmgen.kernel import NoSlip
from lbmgen.lattice import builtin
from lbmgen.methods import assemble_collision_rule, create_kbc, create_srt, create_trt
from lbmgen.methods.entropic import OMEGA_S
from lbmgen.refsim import (
    Scenario, ScenarioError, ScenarioName, Simulation, SimulationDiverged, WallSpec,
    cavity_omega, couette, couette_profile, equilibrium_populations, kinetic_energy,
    lid_driven_cavity, read_snapshot, run, taylor_green, total_mass, total_momentum, velocity,
    write_snapshot,
)
from lbmgen.simplify import select_best
from lbmgen.symexpr import Symbol

GOLDEN = Path(__file__).parent / "data" / "cavity_re100_64_step1000.bin"
W = Symbol("omega")


@pytest.fixture(scope="module")
def srt2():
    rule, _ = select_best(assemble_collision_rule(create_srt(builtin("D2Q9"), W)))
    return rule


def uniform_weights(s, shape):
    return np.broadcast_to(np.array([float(w) for w in s.weights]), tuple(shape) + (s.q,)).copy()


# -- observables

def test_uniform_weights_mass_is_cell_count(d2q9, d3q19):
    assert total_mass(uniform_weights(d2q9, (7, 5))) == pytest.approx(35, abs=1e-12)
    assert total_mass(uniform_weights(d3q19, (4, 3, 2))) == pytest.approx(24, abs=1e-12)


def test_rest_state_has_no_momentum(d2q9):
    f = uniform_weights(d2q9, (6, 6)) * 1.3
    assert total_momentum(f, d2q9) == (0.0, 0.0)
    assert kinetic_energy(f, d2q9) == 0.0


def test_observables_respect_mask(d2q9):
    f = uniform_weights(d2q9, (4, 4))
    mask = np.zeros((4, 4), dtype=bool)
    mask[1:3, 1:3] = True
    assert total_mass(f, mask) == pytest.approx(4, abs=1e-13)


def test_summation_order_is_fixed(d2q9, rng):
    f = uniform_weights(d2q9, (9, 9)) * rng.uniform(0.5, 1.5, (9, 9, 1))
    # compensated summation makes the total independent of the walk order
    assert total_mass(f) == total_mass(f[::-1, ::-1].copy())


def test_equilibrium_populations_reproduce_moments(srt2):
    rng = np.random.default_rng(7)
    rho = rng.uniform(0.9, 1.1, (5, 4))
    u = rng.uniform(-0.05, 0.05, (5, 4, 2))
    f = equilibrium_populations(srt2, rho, u)
    assert np.abs(f.sum(-1) - rho).max() < 1e-14
    assert np.abs(velocity(f, srt2.stencil) - u).max() < 1e-14


# -- snapshots

def test_snapshot_round_trip(tmp_path, rng):
    data = rng.standard_normal((5, 4, 2))
    path = tmp_path / "u.bin"
    write_snapshot(path, data, "velocity", 40)
    back, name, step = read_snapshot(path)
    assert np.array_equal(back, data) and name == "velocity" and step == 40
    header = path.read_bytes().split(b"end\n")[0].decode()
    assert header.splitlines() == ["shape: 5 4 2", "field: velocity", "step: 40"]
    assert path.stat().st_size == len(header) + 4 + data.size * 8


def test_series_csv(tmp_path, srt2):
    series = run(taylor_green(srt2, {"omega": 1.2}, n=8, steps=20, sample_every=10))
    path = tmp_path / "obs.csv"
    series.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,mass,momentum_0,momentum_1,kinetic_energy"
    assert [int(ln.split(",")[0]) for ln in lines[1:]] == [0, 10, 20]


# -- divergence and validation

def test_nan_aborts_with_step_number(srt2):
    sim = Simulation(srt2, (6, 6), "aa", params={"omega": 1.0})
    f = uniform_weights(srt2.stencil, (6, 6))
    f[2, 3, 4] = np.nan
    sim.set_populations(f)
    with pytest.raises(SimulationDiverged) as err:
        sim.step(5)
    assert err.value.step == 1


def test_unstable_run_reports_step(srt2):
    sc = taylor_green(srt2, {"omega": 10.0}, n=8, amplitude=0.05, steps=5000)
    with pytest.raises(SimulationDiverged) as err:
        run(sc)
    assert 0 < err.value.step < 5000


def test_uncovered_face_rejected(srt2):
    with pytest.raises(ScenarioError):
        Scenario(ScenarioName.COUETTE, srt2, (8, 8), {"omega": 1.0}, 10, periodic=(True, False),
                 walls=[WallSpec(NoSlip(), (slice(None), 0))])
    with pytest.raises(ScenarioError):
        Scenario(ScenarioName.COUETTE, srt2, (8, 8), {"omega": 1.0}, 10, periodic=(True, False),
                 walls=[WallSpec(NoSlip(), (slice(None), 0)), WallSpec(NoSlip(), (slice(2, 5), -1))])
    with pytest.raises(ScenarioError):
        Scenario(ScenarioName.COUETTE, srt2, (8, 8, 8), {"omega": 1.0}, 10)
    ok = Scenario(ScenarioName.COUETTE, srt2, (8, 8), {"omega": 1.0}, 10, periodic=(True, False),
                  walls=[WallSpec(NoSlip(), (slice(None), 0)), WallSpec(NoSlip(), (slice(None), -1))])
    assert ok.periodic == (True, False)


def test_two_dimensional_scenarios_reject_3d(d3q19):
    rule = assemble_collision_rule(create_srt(d3q19, W))
    with pytest.raises(ScenarioError):
        taylor_green(rule, {"omega": 1.0})
    with pytest.raises(ScenarioError):
        lid_driven_cavity(rule, {"omega": 1.0})


# -- conservation across methods

@pytest.mark.parametrize("pattern", ["pull", "aa", "eso"])
def test_mass_and_momentum_conserved_trt(pattern, d2q9):
    rule, _ = select_best(assemble_collision_rule(
        create_trt(d2q9, Symbol("omega_e"), Symbol("omega_o"))))
    series = run(taylor_green(rule, {"omega_e": 1.6, "omega_o": 1.1}, n=12, steps=200,
                              sample_every=50, pattern=pattern))
    mass = series.column("mass")
    assert np.abs(mass - mass[0]).max() <= 1e-12 * mass[0]
    assert np.abs(series.column("momentum_0")).max() < 1e-13


def test_kbc_entropy_margin(d2q9):
    rule = assemble_collision_rule(create_kbc(d2q9))
    probe = assemble_collision_rule(create_kbc(d2q9, closed_form=False))
    sc = taylor_green(rule, {OMEGA_S.name: 1.9}, n=16, amplitude=0.05, steps=300,
                      sample_every=100, kbc_probe=probe, with_entropy=True)
    series = run(sc)
    margin = series.column("kbc_entropy_margin")
    assert len(margin) == 4
    assert margin.min() >= -1e-13
    mass = series.column("mass")
    assert np.abs(mass - mass[0]).max() <= 1e-12 * mass[0]


# -- Couette

def test_couette_kinetic_energy_matches_linear_profile(srt2):
    n, lid = 16, 0.05
    series = run(couette(srt2, {"omega": 1.0}, n=n, lid=lid, sample_every=100))
    assert series.steady_step is not None
    u = series.final_velocity[..., 0]
    assert np.abs(u - couette_profile(n, lid)[None, :]).max() < 1e-6
    # integral of rho |u|^2 / 2 over the channel for u = lid y / n
    analytic = n * lid ** 2 * n / 6
    assert series.column("kinetic_energy")[-1] == pytest.approx(analytic, rel=0.01)


# -- lid-driven cavity

def cavity(rule, lid):
    n = 64
    sc = lid_driven_cavity(rule, {"omega": cavity_omega(n, abs(lid), 100)}, n, lid, 1000,
                           sample_every=500)
    return run(sc)


def test_cavity_mirror_symmetry_and_golden(srt2):
    a = cavity(srt2, 0.1)
    b = cavity(srt2, -0.1)
    ua, ub = a.final_velocity, b.final_velocity
    # reversing the lid equals reflecting x -> n-1-x and flipping u_x
    mirrored = np.stack([-ub[::-1, :, 0], ub[::-1, :, 1]], axis=-1)
    scale = np.abs(ua).max()
    assert np.abs(ua - mirrored).max() <= 1e-12 * scale
    golden, name, step = read_snapshot(GOLDEN)
    assert name == "velocity" and step == 1000
    assert np.abs(ua - golden).max() <= 1e-12 * scale


if __name__ == "__main__":
    # regenerate the stored cavity snapshot
    rule, _ = select_best(assemble_collision_rule(create_srt(builtin("D2Q9"), W)))
    write_snapshot(GOLDEN, cavity(rule, 0.1).final_velocity, "velocity", 1000)
