import pytest

from zakotfs import DDGrid


def test_periods_follow_from_doppler_period():
    g = DDGrid(M=31, N=37, nu_p=30e3)
    assert g.tau_p == pytest.approx(1.0 / 30e3)
    assert g.B == pytest.approx(31 * 30e3)
    assert g.T == pytest.approx(37 / 30e3)
    assert g.MN == 1147
    assert g.B * g.T == pytest.approx(g.MN)


def test_bin_sizes_are_inverse_bandwidth_and_duration():
    g = DDGrid(M=5, N=7, nu_p=30e3)
    assert g.delay_bin == pytest.approx(g.tau_p / 5)
    assert g.doppler_bin == pytest.approx(g.nu_p / 7)
    assert g.delay_bin == pytest.approx(1.0 / g.B)
    assert g.doppler_bin == pytest.approx(1.0 / g.T)


def test_crystalline_condition_enforced():
    # explicit tau_p that does not multiply with nu_p to one
    with pytest.raises(ValueError):
        DDGrid(M=5, N=7, nu_p=30e3, tau_p=1.0 / 15e3)
    # consistent explicit tau_p is accepted
    g = DDGrid(M=5, N=7, nu_p=30e3, tau_p=1.0 / 30e3)
    assert g.tau_p * g.nu_p == pytest.approx(1.0)


def test_rejects_degenerate_sizes():
    with pytest.raises(ValueError):
        DDGrid(M=0, N=7, nu_p=30e3)
    with pytest.raises(ValueError):
        DDGrid(M=5, N=0, nu_p=30e3)
    with pytest.raises(ValueError):
        DDGrid(M=5, N=7, nu_p=-1.0)


def test_grid_is_immutable():
    g = DDGrid(M=5, N=7, nu_p=30e3)
    with pytest.raises(Exception):
        g.M = 6
