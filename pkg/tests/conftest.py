import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import phasekit as pk

settings.register_profile(
    "suite",
    deadline=None,
    derandomize=True,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def henon_series():
    values = pk.sample(pk.catalog("henon"), 20000)
    return pk.TimeSeries(values[:, [0]])


@pytest.fixture(scope="session")
def henon_emb(henon_series):
    return pk.embed(henon_series, 2, 1)


@pytest.fixture(scope="session")
def test42_series():
    # 5e4 post-transient samples at dt=0.1, observable = first coordinate
    values = pk.sample(pk.catalog("test42"), 50000, dt=0.1)
    return pk.TimeSeries(values[:, [0]], dt=0.1)


@pytest.fixture(scope="session")
def sine_series():
    # 100 samples per period, 40 periods
    t = np.arange(4000)
    return pk.TimeSeries(np.sin(2.0 * np.pi * t / 100.0))
