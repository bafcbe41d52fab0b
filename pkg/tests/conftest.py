import numpy as np
import pytest

from vortexberry.lattice import Divisor, TorusGrid
from vortexberry.vortex import solve_vortex

TAU0 = 4.0 * np.pi


@pytest.fixture(scope="session")
def grid32():
    return TorusGrid(32, 1.0)


@pytest.fixture(scope="session")
def grid64():
    return TorusGrid(64, 1.0)


@pytest.fixture(scope="session")
def field32(grid32):
    """d=1 vortex at 2*tau0 on a small grid (workhorse for unit tests)."""
    field, _ = solve_vortex(Divisor([[0.52, 0.48]]), 2 * TAU0, grid32, tol=None)
    return field

@pytest.fixture(scope="session")
def field64(grid64):
    field, _ = solve_vortex(Divisor([[0.5, 0.5]]), 2 * TAU0, grid64, tol=None)
    return field


@pytest.fixture(scope="session")
def field64_hi(grid64):
    """d=1 vortex at 8*tau0 (asymptotic-regime checks)."""
    field, _ = solve_vortex(Divisor([[0.5, 0.5]]), 8 * TAU0, grid64, tol=None)
    return field


@pytest.fixture(scope="session")
def flat32(grid32):
    """d=0 constant solution."""
    field, _ = solve_vortex(Divisor(np.zeros((0, 2))), 10.0, grid32)
    return field


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)


def smooth_real(grid, rng, scale=300.0):
    noise = rng.standard_normal((grid.n, grid.n))
    return np.fft.ifft2(np.fft.fft2(noise)
                        * np.exp(-grid.spectral_k2() / scale)).real


def smooth_complex(grid, rng, scale=300.0):
    return smooth_real(grid, rng, scale) + 1j * smooth_real(grid, rng, scale)
