import numpy as np
import pytest

from kreinfield.cli import build_model, bundled_scenario
from kreinfield.krein import IntervalUnion, SpectralDecomposition
from kreinfield.lattice import build_grid, make_potential
from kreinfield.models import build_dirac, build_kg


@pytest.fixture(scope="session")
def ds1():
    model = build_model(bundled_scenario("DS1"))
    return model, SpectralDecomposition(model.generator, model.K)


@pytest.fixture(scope="session")
def ds2():
    model = build_model(bundled_scenario("DS2"))
    return model, SpectralDecomposition(model.generator, model.K)


@pytest.fixture(scope="session")
def ds2_maximal(ds2):
    from kreinfield.states import maximal_state_search

    model, dec = ds2
    return maximal_state_search(model, dec).J_max


@pytest.fixture(scope="session")
def small_kg():
    grid = build_grid(32, 16.0)
    model = build_kg(grid, make_potential(grid, V={"kind": "gaussian_well", "V0": 0.5, "w": 2.0}))
    return model, SpectralDecomposition(model.generator, model.K)


@pytest.fixture(scope="session")
def free_dirac_small():
    grid = build_grid(64, 32.0)
    model = build_dirac(grid, make_potential(grid, m=1.0))
    return model, SpectralDecomposition(model.generator, model.K)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


HALF_LINE = IntervalUnion.half_line(0.0)


# ------------------------------------------------------------ acceptance summary

ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Recorder ``(number, title, passed, detail)`` for the acceptance summary."""
    store = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(number, title, passed, detail):
        store[number] = (title, bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        title, passed, detail = store[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}")
    n_pass = sum(p for _, p, _ in store.values())
    terminalreporter.write_line(f"{n_pass}/{len(store)} criteria passed")
