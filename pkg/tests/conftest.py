import numpy as np
import pytest

from heliofor import use_backend
from heliofor.synth import PlantSpec, SynthConfig, generate

ACCEPTANCE_LINES = []


def record_acceptance(label, passed, detail=""):
    line = f"{label}: {'PASS' if passed else 'FAIL'}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    with use_backend(request.param):
        yield request.param


@pytest.fixture(scope="session")
def small_year():
    """Eight synthetic days: big enough for every model, quick to train on."""
    return generate(PlantSpec(), SynthConfig(days=8))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
