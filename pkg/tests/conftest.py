import numpy as np
import pytest

import crsnoma
from crsnoma import LinkTriple, SystemConfig


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # JIT compilation must not count against any runtime budget
    crsnoma.warmup()


@pytest.fixture(scope="session")
def fig_rate_links():
    """Strong relay path, weak direct link; exponential-gain case."""
    return LinkTriple.uniform(2, 1, 10.0, 1.0, 10.0)


@pytest.fixture(scope="session")
def fig_outage_links():
    """Outage-figure geometry: strong first hop and direct link, weak second hop."""
    with pytest.warns(UserWarning, match="direct link"):
        links = LinkTriple.uniform(2, 1, 10.0, 10.0, 1.0)
    return links


@pytest.fixture
def cfg_20db():
    return SystemConfig.with_a2(100.0, 0.17)


def quad_gain_integral(fn, split):
    """Reference quadrature over (0, inf) split at the given interior points."""
    from scipy.integrate import quad

    pts = [0.0, *split, np.inf]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += quad(fn, a, b, limit=300)[0]
    return total
