import numpy as np
import pytest

from archdam import geometry


@pytest.fixture(scope="session")
def canyon():
    return geometry.morrow_point_canyon()


@pytest.fixture(scope="session")
def baseline(canyon):
    return geometry.make_shape(geometry.morrow_point_design().to_array(), canyon)


def random_design(rng, feasible_radii: bool = True) -> np.ndarray:
    """Uniform in-bounds design; optionally with every rd_i <= ru_i."""
    x = geometry.LOWER + rng.random(geometry.N_VAR) * (geometry.UPPER - geometry.LOWER)
    if feasible_radii:
        ru, rd = x[8:14], x[14:20]
        x[8:14], x[14:20] = np.maximum(ru, rd), np.minimum(ru, rd)
    return x


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    """Record one acceptance line: ``report(name, passed, detail, seconds)``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def report(name: str, passed: bool, detail: str, seconds: float) -> None:
        line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail} [{seconds:.1f} s]"
        lines.append(line)
        print(line)

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
