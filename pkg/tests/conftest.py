"""Shared test helpers."""

from datetime import datetime, timedelta

import numpy as np
import pytest

from windcompare.dataset import Dataset

T0 = datetime(2016, 1, 1)


def make_dataset(turbine_id="T01", period="P1", start=T0, **columns) -> Dataset:
    """Dataset with 10-minute timestamps and the given columns."""
    n = len(next(iter(columns.values())))
    stamps = [start + timedelta(minutes=10 * i) for i in range(n)]
    return Dataset(turbine_id, stamps, {k: np.asarray(v, float) for k, v in columns.items()}, period)


def random_weather(rng, n, w_scale=8.0, t_mean=15.0):
    """Covariate columns drawn from simple weather-like distributions."""
    return {
        "W": w_scale * rng.weibull(2.0, n),
        "T": t_mean + rng.normal(0.0, 6.0, n),
        "D": rng.uniform(0.0, 360.0, n),
        "TI": np.clip(rng.normal(0.08, 0.02, n), 0.005, None),
        "sdD": np.clip(rng.normal(6.0, 2.0, n), 0.1, None),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
