"""Reference simulator executing lowered kernels, plus validation scenarios."""

from .grid import Grid, allocate, fill_periodic, wrap_slots
from .observables import density, entropy, kinetic_energy, total_mass, total_momentum, velocity
from .scenarios import (
    ObservableSeries, Scenario, ScenarioError, ScenarioName, cavity_omega, couette,
    couette_deviation, couette_profile, equilibrium_populations, fit_viscosity,
    lid_driven_cavity, read_snapshot, run, taylor_green, write_snapshot,
)
from .sim import PATTERN_FAMILIES, Simulation, SimulationDiverged, WallSpec, equilibrium_rule
