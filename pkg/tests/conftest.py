import numpy as np
import pytest

from prefolio.market import generate_price_series


@pytest.fixture
def rng():
    return np.random.default_rng(20160113)


@pytest.fixture
def small_series():
    """12 weekdays, 5 assets, mild independent noise."""
    return generate_price_series(days=12, seed=7, daily_vol=0.01)
