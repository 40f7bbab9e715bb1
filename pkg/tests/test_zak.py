import numpy as np
import pytest

from zakotfs import DDGrid
from zakotfs.zak import zak_transform_sampled, inverse_zak_sampled, sample_dd_grid


def test_roundtrip_one_frame(grid57):
    rng = np.random.default_rng(20)
    Q = 4
    Z = rng.standard_normal((Q * grid57.M, grid57.N)) \
        + 1j * rng.standard_normal((Q * grid57.M, grid57.N))
    td = inverse_zak_sampled(Z, grid57, oversample=Q)
    assert td.shape == (Q * grid57.M * grid57.N,)
    back = zak_transform_sampled(td, grid57, oversample=Q)
    np.testing.assert_allclose(back, Z, atol=1e-12)


def test_forward_folds_periods(grid57):
    # three frames concatenated transform like their modulo-N folding
    rng = np.random.default_rng(21)
    Q = 2
    n = Q * grid57.M * grid57.N
    td = rng.standard_normal(3 * n) + 1j * rng.standard_normal(3 * n)
    whole = zak_transform_sampled(td, grid57, oversample=Q)
    parts = sum(zak_transform_sampled(td[i * n:(i + 1) * n], grid57, oversample=Q)
                for i in range(3))
    np.testing.assert_allclose(whole, parts, atol=1e-12)


def test_single_delay_pulse_is_flat_in_doppler(grid57):
    # an impulse in the first delay period has Zak magnitude independent of l
    Q = 1
    td = np.zeros(Q * grid57.M * grid57.N, dtype=complex)
    td[2] = 1.0
    Z = zak_transform_sampled(td, grid57, oversample=Q)
    np.testing.assert_allclose(np.abs(Z[2, :]), np.sqrt(grid57.tau_p), atol=1e-12)
    mask = np.ones(grid57.M, dtype=bool)
    mask[2] = False
    assert np.max(np.abs(Z[mask, :])) < 1e-14


def test_shape_validation(grid57):
    with pytest.raises(ValueError):
        zak_transform_sampled(np.zeros(grid57.M * grid57.N + 1), grid57)
    with pytest.raises(ValueError):
        zak_transform_sampled(np.zeros(0), grid57)
    with pytest.raises(ValueError):
        inverse_zak_sampled(np.zeros((grid57.M + 1, grid57.N)), grid57)
    with pytest.raises(ValueError):
        zak_transform_sampled(np.zeros(grid57.M * grid57.N), grid57, oversample=0)


def test_grid_readoff_strides_oversampling(grid57):
    rng = np.random.default_rng(22)
    Q = 3
    Z = rng.standard_normal((Q * grid57.M, grid57.N)) \
        + 1j * rng.standard_normal((Q * grid57.M, grid57.N))
    y = sample_dd_grid(Z, grid57, oversample=Q)
    assert y.shape == (grid57.M, grid57.N)
    np.testing.assert_allclose(y, Z[::Q, :])
    with pytest.raises(ValueError):
        sample_dd_grid(Z, grid57, oversample=2)
