import numpy as np
import pytest

from lbmgen.equilibria import EquilibriumSpec, RHO, discrete_equilibrium, velocity_symbols
from lbmgen.lattice import builtin
from lbmgen.symexpr import eval_f64


def normwise_error(a, b):
    """Largest per-state ``max|a - b| / max|a|`` over the leading axis."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    return float((np.abs(a - b).max(axis=1) / np.abs(a).max(axis=1)).max())


def equilibrium_values(s, rho, u, spec=None):
    """Numeric discrete equilibrium populations for one state."""
    spec = spec or EquilibriumSpec()
    b = {RHO: float(rho)}
    b.update({sym: float(v) for sym, v in zip(velocity_symbols(s.d), u)})
    return np.array([eval_f64(e, b) for e in discrete_equilibrium(s, spec)])


def random_states(s, n, rng, amplitude=0.3):
    """Random positive populations scattered around the lattice weights."""
    w = np.array(s.weights, dtype=float)
    return w * rng.uniform(1 - amplitude, 1 + amplitude, (n, s.q))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def d2q9():
    return builtin("D2Q9")


@pytest.fixture(scope="session")
def d3q19():
    return builtin("D3Q19")


_criteria = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        _criteria[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        number, _, label = name[len("test_criterion_"):].partition("_")
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(_criteria[name], "SKIP")
        terminalreporter.write_line(f"criterion {int(number):2d} {label.replace('_', ' ')}: {verdict}")
