import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from polarswim.config import InitSpectrum
from polarswim.galerkin import GalerkinBasis, _convolve, from_box, to_box
from polarswim.spectral import Grid, forward, random_solenoidal_field, truncate_nyquist

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def smooth_field(grid, seed, amp=0.5, slope=4.0):
    return random_solenoidal_field(grid, seed, InitSpectrum("power", amp, 1.0, slope))


def band_limited(grid, seed, cutoff, solenoidal=True):
    """Random real field supported on ``|m_i| <= cutoff`` (Nyquist free)."""
    rng = np.random.default_rng(seed)
    f = truncate_nyquist(grid, forward(grid, rng.standard_normal((grid.dim,) + grid.n)))
    basis = GalerkinBasis(grid, cutoff)
    f = from_box(basis, to_box(basis, f))
    if solenoidal:
        f = from_box(basis, basis.project(to_box(basis, f)))
    return f


class DirectConvolution:
    """Nonlinear terms by explicit convolution sums on the centred box."""

    def __init__(self, grid, cutoff):
        self.grid = grid
        self.c = cutoff
        self.basis = GalerkinBasis(grid, cutoff)
        self.k = self.basis.kvec

    def box(self, f):
        return to_box(self.basis, f)

    def grad(self, f):
        return 1j * f[:, None] * self.k[None, :]

    def advect(self, a, b):
        c = self.c
        return _convolve("j,ij...->i...", self.box(a), c, self.grad(self.box(b)), c, c)

    def cubic(self, p):
        c = self.c
        pb = self.box(p)
        sq = _convolve("i,i...->...", pb, c, pb, c, 2 * c)
        return _convolve(",i...->i...", sq, 2 * c, pb, c, c)

    def grad_times(self, u, p, part=None):
        c = self.c
        g = self.grad(self.box(u))
        if part == "skw":
            g = 0.5 * (g - np.swapaxes(g, 0, 1))
        elif part == "sym":
            g = 0.5 * (g + np.swapaxes(g, 0, 1))
        return _convolve("ij,j...->i...", g, c, self.box(p), c, c)


@pytest.fixture(scope="session")
def g8():
    return Grid.cube(3, 8)


@pytest.fixture(scope="session")
def g16():
    return Grid.cube(3, 16)


@pytest.fixture(scope="session")
def g32_2d():
    return Grid.cube(2, 32)


def rel(a, b):
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


def isclose(a, b, rtol):
    return math.isclose(a, b, rel_tol=rtol, abs_tol=0.0)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
