import numpy as np
import pytest

from undervolt.dataflow import Layer
from undervolt.harness.config import build_config
from undervolt.harness.experiments import load_workload
from undervolt.harness.model import load_model, reference_manifest
from undervolt.qarith import QTensor


@pytest.fixture(scope="session")
def ref_model():
    return load_model(reference_manifest())


@pytest.fixture(scope="session")
def desk_config():
    """Desk-scale settings: 64x64 array, 1000 test images."""
    return build_config(overrides={"array.n": 64, "splits.test": 1000, "plots": False})


@pytest.fixture(scope="session")
def workload(desk_config):
    return load_workload(desk_config)


def random_layer(rng, out_dim, in_dim, zero_frac=0.3, activation="relu"):
    w = rng.integers(-128, 128, size=(out_dim, in_dim))
    w[rng.random(w.shape) < zero_frac] = 0
    bias = rng.integers(-5000, 5000, size=out_dim)
    return Layer(QTensor(w.astype(np.int8), 0.01), bias, 1 / 127, 0.05, activation)


def random_acts(rng, in_dim, batch, zero_frac=0.3):
    a = rng.integers(0, 128, size=(in_dim, batch))
    a[rng.random(a.shape) < zero_frac] = 0
    return QTensor(a.astype(np.int8), 1 / 127)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
