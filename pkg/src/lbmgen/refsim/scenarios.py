"""Validation scenarios: Taylor-Green vortex, Couette flow and lid-driven cavity."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ..kernel import UBB, BoundaryMode, NoSlip
from ..methods.assemble import CollisionRule
from .observables import entropy, kinetic_energy, total_mass, total_momentum, velocity
from .sim import Simulation, WallSpec, equilibrium_rule

__all__ = [
    "ScenarioName", "Scenario", "ObservableSeries", "ScenarioError", "run",
    "taylor_green", "couette", "lid_driven_cavity", "cavity_omega",
    "equilibrium_populations", "fit_viscosity", "couette_profile", "couette_deviation",
    "write_snapshot", "read_snapshot",
]


class ScenarioError(ValueError):
    pass


class ScenarioName(enum.Enum):
    TAYLOR_GREEN_2D = "taylor-green-2d"
    COUETTE = "couette"
    LID_DRIVEN_CAVITY = "lid-driven-cavity"


def _rule_fn(rule: CollisionRule):
    fn = rule.compile()
    names = [p.name for p in rule.parameters]

    def apply(f: np.ndarray, params: Mapping) -> np.ndarray:
        missing = [n for n in names if n not in params]
        if missing:
            raise KeyError(f"missing parameter(s) {', '.join(missing)}")
        cols = [f[..., q] for q in range(f.shape[-1])]
        with np.errstate(all="ignore"):
            out = fn(*cols, *[params[n] for n in names])
        return np.stack([np.broadcast_to(o, f.shape[:-1]) for o in out], axis=-1)
    return apply


def equilibrium_populations(rule: CollisionRule, rho: np.ndarray, u: np.ndarray,
                            params: Mapping | None = None) -> np.ndarray:
    """``f_eq(rho, u)`` per cell, ``u`` of shape ``(*shape, d)``."""
    s = rule.stencil
    c = np.asarray(s.directions, dtype=float)
    w = np.asarray([float(x) for x in s.weights])
    rho = np.asarray(rho, dtype=float)
    # any state with these moments maps to f_eq under the rule with unit rates
    guess = w * (rho[..., None] + rho[..., None] * (u @ c.T) / float(s.cs2))
    eq = equilibrium_rule(rule)
    return _rule_fn(eq)(guess, dict(params or {}))


@dataclass
class Scenario:
    """Everything :func:`run` needs; ``u0`` maps interior cell coordinates
    (arrays, one per axis) to the initial velocity ``(*shape, d)``."""

    name: ScenarioName
    rule: CollisionRule
    shape: tuple
    params: dict
    steps: int
    u0: Callable | None = None
    walls: Sequence[WallSpec] = ()
    periodic: tuple | None = None
    pattern: str = "pull"
    boundary_mode: BoundaryMode | str = BoundaryMode.INDEX_LIST
    backend: str = "interp"
    sample_every: int = 100
    snapshot_every: int | None = None
    steady_tol: float | None = None
    with_entropy: bool = False
    kbc_probe: CollisionRule | None = None
    kbc_cells: int = 16
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.shape = tuple(int(n) for n in self.shape)
        d = self.rule.stencil.d
        if len(self.shape) != d:
            raise ScenarioError(f"{self.rule.stencil.name} needs a {d}D domain")
        if self.periodic is None:
            self.periodic = (True,) * d
        self.periodic = tuple(bool(p) for p in self.periodic)
        if self.steps < 0 or self.sample_every < 1:
            raise ScenarioError("steps must be >= 0 and sample_every >= 1")
        covered = np.zeros(tuple(n + 2 for n in self.shape), dtype=bool)
        for w in self.walls:
            covered[w.region] = True
        for a, p in enumerate(self.periodic):
            if p:
                continue
            for side in (0, -1):
                face = [slice(1, -1) if b != a else side for b in range(d)]
                if not covered[tuple(face)].all():
                    raise ScenarioError(f"face {'low' if side == 0 else 'high'} of non-periodic "
                                        f"axis {a} has no boundary assignment")


@dataclass
class ObservableSeries:
    """One row per sample plus optional velocity snapshots ``(step, u)``."""

    columns: list
    rows: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    final_velocity: np.ndarray | None = None
    final_populations: np.ndarray | None = None
    steps_run: int = 0
    steady_step: int | None = None

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def write_csv(self, path, delimiter: str = ","):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def write_snapshot(path, data: np.ndarray, name: str, step: int):
    """Flat little-endian float64 values (C order) after a short text header."""
    data = np.ascontiguousarray(data, dtype="<f8")
    header = (f"shape: {' '.join(str(n) for n in data.shape)}\n"
              f"field: {name}\nstep: {int(step)}\nend\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(data.tobytes())


def read_snapshot(path) -> tuple:
    """``(data, name, step)`` of a file written by :func:`write_snapshot`."""
    raw = Path(path).read_bytes()
    meta = {}
    pos = 0
    while True:
        end = raw.index(b"\n", pos)
        line = raw[pos:end].decode("ascii")
        pos = end + 1
        if line == "end":
            break
        key, _, value = line.partition(": ")
        meta[key] = value
    shape = tuple(int(n) for n in meta["shape"].split())
    data = np.frombuffer(raw[pos:], dtype="<f8").reshape(shape).copy()
    return data, meta["field"], int(meta["step"])


def _entropy_per_cell(f, feq):
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.sum(f * np.log(f / feq), axis=-1)


def run(sc: Scenario) -> ObservableSeries:
    """Initialize ``f = f_eq(rho=1, u0)``, step and sample observables.

    Raises :class:`~lbmgen.refsim.sim.SimulationDiverged` with the step
    number when populations become non-finite.
    """
    s = sc.rule.stencil
    sim = Simulation(sc.rule, sc.shape, sc.pattern, periodic=sc.periodic, walls=sc.walls,
                     boundary_mode=sc.boundary_mode, params=sc.params, backend=sc.backend)
    grids = np.meshgrid(*[np.arange(n, dtype=float) for n in sc.shape], indexing="ij")
    u0 = np.zeros(sc.shape + (s.d,)) if sc.u0 is None else np.asarray(sc.u0(*grids), dtype=float)
    sim.set_populations(equilibrium_populations(sc.rule, np.ones(sc.shape), u0, sc.params))
    mask = sim.fluid_mask()

    cols = ["step", "mass"] + [f"momentum_{i}" for i in range(s.d)] + ["kinetic_energy"]
    eq_fn = None
    if sc.with_entropy or sc.kbc_probe is not None:
        eq_fn = _rule_fn(equilibrium_rule(sc.rule))
    if sc.with_entropy:
        cols.append("entropy")
    if sc.kbc_probe is not None:
        cols.append("kbc_entropy_margin")
        post_fn = _rule_fn(sc.rule)
        probe_fn = _rule_fn(sc.kbc_probe)
        flat = np.flatnonzero(mask.ravel())
        sample = flat[np.linspace(0, len(flat) - 1, min(sc.kbc_cells, len(flat))).astype(int)]
        omega_s = sc.params.get("omega_s")
        forced = dict(sc.params, omega_h=omega_s)
    series = ObservableSeries(cols)

    def sample_row(f):
        row = [sim.time, total_mass(f, mask), *total_momentum(f, s, mask), kinetic_energy(f, s, mask)]
        if eq_fn is not None:
            feq = eq_fn(f, sc.params)
        if sc.with_entropy:
            row.append(entropy(f, feq, mask))
        if sc.kbc_probe is not None:
            cells = f.reshape(-1, s.q)[sample]
            eq_cells = feq.reshape(-1, s.q)[sample]
            a = _entropy_per_cell(post_fn(cells, sc.params), eq_cells)
            b = _entropy_per_cell(probe_fn(cells, forced), eq_cells)
            row.append(float(np.min(a - b)))
        series.rows.append(row)

    def snapshot(f):
        series.snapshots.append((sim.time, velocity(f, s)))

    f = sim.populations()
    sample_row(f)
    if sc.snapshot_every:
        snapshot(f)
    prev_u = velocity(f, s)
    while sim.time < sc.steps:
        n = min(sc.sample_every - sim.time % sc.sample_every, sc.steps - sim.time)
        sim.step(n)
        f = sim.populations()
        if sim.time % sc.sample_every == 0 or sim.time == sc.steps:
            sample_row(f)
        if sc.snapshot_every and sim.time % sc.snapshot_every == 0:
            snapshot(f)
        if sc.steady_tol is not None and sim.time % sc.sample_every == 0:
            u = velocity(f, s)
            norm = np.linalg.norm(u[mask])
            change = np.linalg.norm((u - prev_u)[mask]) / norm if norm > 0 else 0.0
            prev_u = u
            if change < sc.steady_tol:
                series.steady_step = sim.time
                break
    series.final_populations = f
    series.final_velocity = velocity(f, s)
    series.steps_run = sim.time
    return series


# -- scenario builders ---------------------------------------------------

def taylor_green(rule: CollisionRule, params: Mapping, n: int = 32, amplitude: float = 0.01,
                 steps: int = 2000, sample_every: int = 100, **kw) -> Scenario:
    """Decaying vortex ``u = U (-cos kx sin ky, sin kx cos ky)``, ``k = 2 pi / n``."""
    if rule.stencil.d != 2:
        raise ScenarioError("the Taylor-Green scenario is two-dimensional")
    k = 2 * math.pi / n

    def u0(x, y):
        return np.stack([-amplitude * np.cos(k * x) * np.sin(k * y),
                         amplitude * np.sin(k * x) * np.cos(k * y)], axis=-1)
    kw.setdefault("snapshot_every", sample_every)
    return Scenario(ScenarioName.TAYLOR_GREEN_2D, rule, (n, n), dict(params), steps, u0=u0,
                    sample_every=sample_every, info={"k": k, "amplitude": amplitude}, **kw)


def fit_viscosity(series: ObservableSeries, k: float) -> float:
    """Least-squares fit of ``log A(t) = log A0 - 2 nu k^2 t``, where ``A`` is the
    projection of each velocity snapshot onto the initial mode shape."""
    t0, u0 = series.snapshots[0]
    mode = u0 / np.sqrt(np.sum(u0 * u0))
    ts, amps = [], []
    for t, u in series.snapshots:
        ts.append(t)
        amps.append(np.sum(u * mode))
    slope = np.polyfit(np.asarray(ts, float), np.log(np.asarray(amps)), 1)[0]
    return -slope / (2 * k * k)


def couette(rule: CollisionRule, params: Mapping, n: int = 32, lid: float = 0.05,
            max_steps: int = 100000, steady_tol: float = 1e-10, **kw) -> Scenario:
    """Channel periodic along x, resting wall below, UBB lid moving along x above."""
    d = rule.stencil.d
    shape = (n,) * d
    lid_u = (lid,) + (0,) * (d - 1)
    low = tuple([slice(None), 0] + [slice(None)] * (d - 2))
    high = tuple([slice(None), -1] + [slice(None)] * (d - 2))
    walls = [WallSpec(NoSlip(), low), WallSpec(UBB(lid_u, name="lid"), high)]
    periodic = (True, False) + (True,) * (d - 2)
    return Scenario(ScenarioName.COUETTE, rule, shape, dict(params), max_steps, walls=walls,
                    periodic=periodic, steady_tol=steady_tol, info={"lid": lid}, **kw)


def couette_profile(n: int, lid: float) -> np.ndarray:
    """Analytic u_x(y) with walls half-way between the ghost and edge cells."""
    y = np.arange(n) + 1.0
    return lid * (y - 0.5) / n


def couette_deviation(series: ObservableSeries, lid: float) -> float:
    u = series.final_velocity
    n = u.shape[1]
    prof = couette_profile(n, lid).reshape((1, n) + (1,) * (u.ndim - 3))
    dev = np.abs(u[..., 0] - prof).max()
    return float(max(dev, np.abs(u[..., 1:]).max()))


def cavity_omega(n: int, lid: float, reynolds: float, cs2: float = 1 / 3) -> float:
    """Relaxation rate giving ``Re = lid * n / nu``."""
    nu = lid * n / reynolds
    return 1.0 / (nu / cs2 + 0.5)


def lid_driven_cavity(rule: CollisionRule, params: Mapping, n: int = 64, lid: float = 0.1,
                      steps: int = 5000, **kw) -> Scenario:
    """Square cavity with resting side and bottom walls and a lid moving along x."""
    if rule.stencil.d != 2:
        raise ScenarioError("the cavity scenario is two-dimensional")
    walls = [
        WallSpec(NoSlip(), (slice(None), 0)),
        WallSpec(NoSlip(), (0, slice(None))),
        WallSpec(NoSlip(), (-1, slice(None))),
        WallSpec(UBB((lid, 0), name="lid"), (slice(1, -1), -1)),
    ]
    kw.setdefault("snapshot_every", steps if steps else None)
    return Scenario(ScenarioName.LID_DRIVEN_CAVITY, rule, (n, n), dict(params), steps, walls=walls,
                    periodic=(False, False), info={"lid": lid}, **kw)
