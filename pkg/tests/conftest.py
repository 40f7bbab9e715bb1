"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from zakotfs import DDGrid, GaussianSincFilter, channel_support_bounds


def rect_support(grid):
    """All integer (k, l) with |k| <= 2M-1, |l| <= 2N-1."""
    k_lo, k_hi, l_lo, l_hi = channel_support_bounds(grid)
    return [(k, l) for k in range(k_lo, k_hi + 1) for l in range(l_lo, l_hi + 1)]


@pytest.fixture(scope="session")
def grid57():
    return DDGrid(M=5, N=7, nu_p=30e3)


@pytest.fixture(scope="session")
def grid3137():
    return DDGrid(M=31, N=37, nu_p=30e3)


@pytest.fixture(scope="session")
def filt57(grid57):
    return GaussianSincFilter.for_grid(grid57)


@pytest.fixture(scope="session")
def filt3137(grid3137):
    return GaussianSincFilter.for_grid(grid3137)
