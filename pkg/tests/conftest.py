import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from isolip.measure import AtomicMeasure

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def measures(draw, max_atoms: int = 4, lattice: bool | None = None):
    """Probability measures with up to ``max_atoms`` atoms.

    Lattice draws put atoms on a half-integer grid and use small integer
    weights, which produces many exact ties; the rest are continuous.
    """
    n = draw(st.integers(1, max_atoms))
    on_grid = draw(st.booleans()) if lattice is None else lattice
    if on_grid:
        pts = draw(st.lists(st.integers(-8, 8), min_size=n, max_size=n, unique=True))
        atoms = [p / 2 for p in pts]
        counts = draw(st.lists(st.integers(1, 4), min_size=n, max_size=n))
    else:
        atoms = draw(st.lists(st.floats(-5, 5, allow_nan=False).map(lambda v: round(v, 6)),
                              min_size=n, max_size=n, unique=True))
        counts = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    w = np.asarray(counts, dtype=float)
    return AtomicMeasure.from_values(atoms, w / w.sum())


def random_measure(rng: np.random.Generator, max_atoms: int = 4) -> AtomicMeasure:
    n = int(rng.integers(1, max_atoms + 1))
    if rng.random() < 0.5:
        atoms = rng.choice(np.arange(-8, 9) / 2, size=n, replace=False)
        w = rng.integers(1, 5, size=n).astype(float)
    else:
        atoms = np.round(rng.uniform(-5, 5, size=n), 6)
        w = rng.uniform(0.05, 1.0, size=n)
    return AtomicMeasure.from_values(atoms, w / w.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[_ACCEPTANCE_KEY]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, seconds, detail in sorted(lines):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {name} ({seconds:.1f}s) {detail}")
