"""Pytest configuration and fixtures."""
import json

import numpy as np
import pytest

from collint.scenarios import SIGMA_X, SIGMA_Y, SIGMA_Z


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def paulis():
    """sigma_x, sigma_y, sigma_z."""
    return SIGMA_X, SIGMA_Y, SIGMA_Z


def random_hermitian(rng, d: int, scale: float = 1.0) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (x + x.conj().T)


def random_density(rng, d: int) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


@pytest.fixture
def hermitian_factory(rng):
    """Random Hermitian matrices of a given size."""
    return lambda d, scale=1.0: random_hermitian(rng, d, scale)


@pytest.fixture
def density_factory(rng):
    """Random full-rank density matrices of a given size."""
    return lambda d: random_density(rng, d)


@pytest.fixture
def toy_config():
    """Scalar toy config with the branch cut inside the grid."""
    return {
        "scenario": "scalar_toy",
        "parameters": {"a": 10.0, "b": 1.0},
        "dt_grid": [0.05, 0.1, 0.2, 0.3, 0.4],
        "orders": [0, 1, 2],
        "outputs": ["generator", "series"],
    }


@pytest.fixture
def swap_config():
    """Partial swap config with the full set of state outputs."""
    return {
        "scenario": "partial_swap",
        "parameters": {"omega": 1.0, "r": 0.5},
        "dt_grid": [0.02, 0.04, 0.08, 0.16],
        "orders": [0, 1, 2],
        "t_max": 0.5,
        "samples_per_step": 2,
        "outputs": ["generator", "series", "trajectory", "diagnostics"],
    }


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict (or raw text) to a file and return its path."""
    def write(config, name: str = "config.json") -> str:
        path = tmp_path / name
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        return str(path)
    return write
