import numpy as np
import pytest

from sqnz import BandConfig, oscillator_from_gamma_ratio, squeeze_derive


@pytest.fixture(scope="session")
def onres_osc():
    return oscillator_from_gamma_ratio(0.004)


@pytest.fixture(scope="session")
def onres_band():
    return BandConfig(Xi=1.0, Delta=0.015, A=1.0, squeeze=squeeze_derive(1.0, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
