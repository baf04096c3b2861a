import numpy as np
import pytest
from ghzphotonics.quantum import ghz_state
from ghzphotonics.noise import NoiseParams, noise_state
from ghzphotonics.hardy import REFERENCE_SETTINGS

CALIBRATED = NoiseParams(epsilon_pop=1 - 0.9897, lambda_coh=0.9722 / 0.9897)


@pytest.fixture
def ghz():
    return ghz_state(4).density_matrix()


@pytest.fixture
def calibrated_state():
    return noise_state(CALIBRATED)


@pytest.fixture
def reference_settings():
    return REFERENCE_SETTINGS


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
