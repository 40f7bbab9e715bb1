"""Sampled Zak transform pair on an oversampled delay axis.

Convention: for a time-domain signal a(t) the Zak image is

    Z_a(tau, nu) = sqrt(tau_p) * sum_k a(tau + k tau_p) exp(-j 2 pi nu k tau_p)

Here the delay axis is sampled at tau_i = i * tau_p / (Q M) (Q-fold
oversampling of the delay bin) and the Doppler axis at nu_l = l / T,
which are exactly the DD grid Doppler frequencies.  At those frequencies
the phase factor is N-periodic in k, so the transform reduces to a DFT
over tau_p-period index after folding the input modulo N periods.

These routines back the end-to-end time-domain reference chain in the
tests; the simulator itself never leaves the DD domain.
"""

from __future__ import annotations

import numpy as np

from .grid import DDGrid


def zak_transform_sampled(td, grid: DDGrid, oversample: int = 1) -> np.ndarray:
    """DD image of a sampled time-domain signal.

    td: complex samples at rate Q*M/tau_p starting at t = 0, length a whole
    number of tau_p periods.  Returns Z of shape (Q*M, N) with
    Z[i, l] = sqrt(tau_p) * sum_k td[i + k Q M] exp(-j 2 pi l k / N).
    """
    td = np.asarray(td, dtype=np.complex128).ravel()
    Q = int(oversample)
    if Q < 1:
        raise ValueError(f"oversample must be >= 1, got {Q}")
    M, N = grid.M, grid.N
    qm = Q * M
    if len(td) == 0 or len(td) % qm != 0:
        raise ValueError(
            f"signal length {len(td)} is not a whole number of delay periods ({qm} samples each)")
    n_periods = len(td) // qm
    # fold modulo N periods; the Doppler phase only sees k mod N
    folded = np.zeros((N, qm), dtype=np.complex128)
    blocks = td.reshape(n_periods, qm)
    for k in range(n_periods):
        folded[k % N] += blocks[k]
    # Z[i, l] = sum_k folded[k, i] e^{-j2pi l k / N}: DFT along the period axis
    Z = np.sqrt(grid.tau_p) * np.fft.fft(folded, axis=0).T
    return Z


def inverse_zak_sampled(Z, grid: DDGrid, oversample: int = 1) -> np.ndarray:
    """One T-duration time-domain window matching zak_transform_sampled.

    Z: (Q*M, N) DD samples.  Returns td of length Q*M*N with
    td[i + k Q M] = (1 / (N sqrt(tau_p))) * sum_l Z[i, l] exp(j 2 pi l k / N).
    """
    Z = np.asarray(Z, dtype=np.complex128)
    Q = int(oversample)
    if Q < 1:
        raise ValueError(f"oversample must be >= 1, got {Q}")
    M, N = grid.M, grid.N
    qm = Q * M
    if Z.shape != (qm, N):
        raise ValueError(f"DD image must be ({qm}, {N}), got {Z.shape}")
    blocks = np.fft.ifft(Z.T, axis=0) / np.sqrt(grid.tau_p)  # (N periods, qm)
    return blocks.reshape(N * qm).copy()


def sample_dd_grid(Z, grid: DDGrid, oversample: int = 1) -> np.ndarray:
    """Fundamental-domain read-off y[k, l] = Z[k*Q, l]."""
    Z = np.asarray(Z, dtype=np.complex128)
    Q = int(oversample)
    if Z.shape != (Q * grid.M, grid.N):
        raise ValueError(f"DD image must be ({Q * grid.M}, {grid.N}), got {Z.shape}")
    return Z[::Q, :].copy()
