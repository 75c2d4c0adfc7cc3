import numpy as np
import pytest

from wssvm import _backend
from wssvm.data import Dataset


@pytest.fixture(params=_backend.available())
def backend(request):
    """Run a test once per importable backend, restoring the default after."""
    previous = _backend.backend_name()
    _backend.set_backend(request.param)
    yield request.param
    _backend.set_backend(previous)


@pytest.fixture
def two_point():
    return Dataset.from_dense([[-1.0], [1.0]]), np.array([-1.0, 1.0])


def blobs(centres, per_class, sigma=1.0, seed=0):
    """Gaussian blobs around the given centres; labels are 0..k-1."""
    rng = np.random.default_rng(seed)
    centres = np.asarray(centres, dtype=float)
    X = np.concatenate([c + sigma * rng.standard_normal((per_class, centres.shape[1])) for c in centres])
    y = np.repeat(np.arange(len(centres)), per_class)
    return X, y


def random_dataset(rng, l, d, density=1.0):
    X = rng.standard_normal((l, d))
    if density < 1.0:
        X[rng.random((l, d)) > density] = 0.0
    return Dataset.from_dense(X), X


ACCEPTANCE_LINES = {}


def record_criterion(number: int, ok: bool, detail: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
