import pytest

from cevlab import CevParams


@pytest.fixture
def standard_params() -> CevParams:
    """Reference configuration used throughout: k=1, l=1, sigma=1, a=0.75, x0=1."""
    return CevParams(k=1.0, l=1.0, sigma=1.0, a=0.75, x0=1.0)


@pytest.fixture
def shifted_params() -> CevParams:
    """Same dynamics started away from the long-run level (x0=2)."""
    return CevParams(k=1.0, l=1.0, sigma=1.0, a=0.75, x0=2.0)


@pytest.fixture
def noiseless_params() -> CevParams:
    """sigma=0 degenerate model; every scheme collapses to deterministic Euler."""
    return CevParams(k=1.0, l=1.0, sigma=0.0, a=0.75, x0=2.0)
