import numpy as np
import pytest
from hypothesis import strategies as st

from simpson import datasets
from simpson.contingency import JointTable


@pytest.fixture(scope="session")
def covid():
    return datasets.load_fixture("covid").to_joint()


@pytest.fixture(scope="session")
def smoking():
    return datasets.load_fixture("smoking_coarse").to_joint()


@pytest.fixture(scope="session")
def smoking_full():
    return datasets.load_fixture("smoking_full")


# positive cells keep every conditioning margin away from zero
cells = st.lists(st.floats(1e-3, 1.0, allow_nan=False), min_size=8, max_size=8)


@st.composite
def joint_tables(draw):
    v = np.array(draw(cells)).reshape(2, 2, 2)
    return JointTable(v / v.sum())


def paradox_tables(n, seed=0, alpha=0.5):
    """Paradox tables from a plain numpy Dirichlet, independent of the package sampler."""
    from simpson.contingency import detect_simpson

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        p = rng.dirichlet([alpha] * 8).reshape(2, 2, 2)
        if p.sum(axis=0).min() < 1e-6:
            continue
        t = JointTable(p / p.sum())
        if detect_simpson(t).is_paradox:
            out.append(t)
    return out


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
