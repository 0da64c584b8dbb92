import numpy as np
import pytest

from gradpath import ObjectiveSpec, QuadraticSpec


def random_convex_quadratic(rng, d_min=2, d_max=5, sigma_range=(0.2, 5.0)):
    """Rotated positive-definite quadratic with a random offset and start."""
    d = int(rng.integers(d_min, d_max + 1))
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    sigma = np.sort(rng.uniform(*sigma_range, d))[::-1]
    p = rng.standard_normal(d)
    x0 = p + q @ rng.standard_normal(d)
    return QuadraticSpec(
        dim=d, sigma=sigma, basis=q, projection=p,
        alpha=q.T @ (x0 - p), x0=x0,
    )


def scalar_objective(value, deriv):
    return ObjectiveSpec(
        dim=1,
        value=lambda x: float(value(x[0])),
        gradient=lambda x: np.array([deriv(x[0])]),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
