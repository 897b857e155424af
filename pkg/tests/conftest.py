import numpy as np
import pytest

from canids import dataset, kernels
from canids.nncore import allocate_layers
from canids.trainer import TrainConfig, train


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record a line for an acceptance criterion: ``criterion(number, title, ok, detail)``.

    ``ok=None`` marks a criterion that could not run here.
    """

    def record(number, title, ok, detail=""):
        ACCEPTANCE[number] = (title, None if ok is None else bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        tag = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{tag}] {number:>2}. {title}  {detail}")


@pytest.fixture(params=[kernels.NUMBA, kernels.NUMPY], ids=lambda k: k.name)
def impl(request):
    kernels.warmup(request.param)
    return request.param


@pytest.fixture(scope="session")
def synth5():
    return dataset.gen_synthetic(dataset.default_synthetic_spec(200), seed=7)


@pytest.fixture(scope="session")
def small_model(synth5):
    model, _ = train(allocate_layers(2, synth5.num_classes), synth5, TrainConfig(epochs=20, num_batches=50, seed=3))
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
