import numpy as np
import pytest

from preictal.config import EngineConfig
from preictal.recording import SynthSpec, generate_synthetic


@pytest.fixture
def config():
    return EngineConfig()


@pytest.fixture(scope="session")
def quiet_recording():
    return generate_synthetic(SynthSpec(duration_s=120.0, seed=11))


@pytest.fixture(scope="session")
def one_seizure_recording():
    return generate_synthetic(
        SynthSpec(duration_s=300.0, seizure_times=(150.0,), seizure_len_s=20.0, seed=7)
    )


def random_unit_vectors(rng: np.random.Generator, count: int, dim: int = 12):
    return rng.random((count, dim))
