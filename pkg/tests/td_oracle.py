"""Independent time-domain reference chain for effective-channel taps.

Everything here works in continuous time with dense quadrature, touching
none of the tap-synthesis code under test: the transmit signal for a
DD-origin probe pulse is written in closed form as a filtered pulse train

    s0(t) = sqrt(tau_p) sum_n f(t - n tau_p) G(n tau_p),
    G(s)  = int g(nu) exp(j 2 pi nu s) dnu,

the physical paths act on it in the time domain, the result is Zak
transformed on a dense delay grid, and the receive filter is applied as a
2D twisted-convolution quadrature before sampling the DD grid.  The
simulator's tap quadrature plus discrete alias sum must reproduce these
samples.
"""

import numpy as np

from zakotfs.channel import ChannelRealization
from zakotfs.filters import GaussianSincFilter
from zakotfs.grid import DDGrid


def td_chain_response(chan: ChannelRealization, f: GaussianSincFilter,
                      grid: DDGrid, oversample: int = 16, half_width: int = 16):
    """DD-grid samples of the received origin probe, shape (M, N)."""
    B, T = f.B, f.T
    tau_p, nu_p = grid.tau_p, grid.nu_p
    M, N = grid.M, grid.N
    Q, K = oversample, half_width

    dt = 1.0 / (Q * B)
    dv = 1.0 / (Q * T)
    tq = np.arange(-K * Q, K * Q + 1) * dt
    vq = np.arange(-K * Q, K * Q + 1) * dv

    # transmit pulse train for the origin probe
    n_pulse = np.arange(-N - 8, N + 9)
    Gn = np.trapezoid(f.doppler_profile(vq)
                      * np.exp(2j * np.pi * np.multiply.outer(n_pulse * tau_p, vq)),
                      vq, axis=-1)

    def s0(t):
        t = np.asarray(t)
        return np.sqrt(tau_p) * np.sum(
            f.delay_profile(t[..., None] - n_pulse * tau_p) * Gn, axis=-1)

    def r_of(t):
        t = np.asarray(t)
        out = np.zeros(t.shape, dtype=np.complex128)
        for h_p, tau_1, nu_1 in zip(chan.gains, chan.delays, chan.dopplers):
            out += h_p * s0(t - tau_1) * np.exp(2j * np.pi * nu_1 * (t - tau_1))
        return out

    ks = np.arange(-N - 10, N + 11)
    wrx = (f.delay_profile(tq)[:, None] * f.doppler_profile(vq)[None, :]) \
        * np.exp(2j * np.pi * np.outer(tq, vq))

    y = np.empty((M, N), dtype=np.complex128)
    for k in range(M):
        tau_vals = k / B - tq
        rv = r_of(tau_vals[:, None] + ks[None, :] * tau_p)        # (n_t, n_k)
        base = wrx * np.exp(2j * np.pi * vq[None, :] * tau_vals[:, None])
        for l in range(N):
            ph = np.exp(-2j * np.pi * np.multiply.outer(l / T - vq, ks * tau_p))
            z = np.sqrt(tau_p) * rv @ ph.T                        # Zak over (tau, nu) grid
            y[k, l] = np.trapezoid(np.trapezoid(base * z, vq, axis=1), tq)
    return y
