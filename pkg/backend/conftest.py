"""Shared fixtures: illustrative plants, the power grid and planted DD systems."""

import numpy as np
import pytest

from app.control.geometry import Subspace
from app.control.linalg import DEFAULT_TOL
from app.models import LtiSystem, build_power_grid, example_system


@pytest.fixture
def tol():
    return DEFAULT_TOL


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def example1():
    return example_system(1)


@pytest.fixture
def example2():
    return example_system(2)


@pytest.fixture
def power_grid():
    return build_power_grid()


@pytest.fixture
def scalar_plant():
    """x' = -x + u + d, z = x."""
    return LtiSystem([[-1.0]], [[1.0]], [[1.0]], [[1.0]], name="scalar")


def plant_dd_system(rng: np.random.Generator, n: int, k: int, m: int, p: int = 1, l: int = 1):
    """
    Random plant for which span(V) is controlled invariant inside ker H and
    contains im E, together with V and a gain F0 that renders it invariant.
    """
    V, _ = np.linalg.qr(rng.standard_normal((n, k)))
    P = V @ V.T
    R = rng.standard_normal((n, n))
    B = rng.standard_normal((n, m))
    F0 = rng.standard_normal((m, n))
    A = R - (np.eye(n) - P) @ (R + B @ F0) @ P
    H = rng.standard_normal((p, n)) @ (np.eye(n) - P)
    E = V @ rng.standard_normal((k, l))
    return LtiSystem(A, B, E, H, name="planted"), Subspace(V), F0


@pytest.fixture
def planted():
    return plant_dd_system
