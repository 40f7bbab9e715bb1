"""Physical delay-Doppler channels: Vehicular-A sampling and test fixtures.

A physical channel is a finite set of paths, each a complex gain with a
continuous (fractional) delay in seconds and Doppler in Hz.  Per-path
gains are circularly-symmetric complex Gaussian with variance given by
the normalized power profile, so the ensemble channel power is 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ChannelRealization:
    """One draw of a multipath DD channel for a single Tx/Rx antenna pair."""

    gains: np.ndarray      # complex, (P,)
    delays: np.ndarray     # seconds, (P,)
    dopplers: np.ndarray   # Hz, (P,)

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=np.complex128).ravel()
        self.delays = np.asarray(self.delays, dtype=np.float64).ravel()
        self.dopplers = np.asarray(self.dopplers, dtype=np.float64).ravel()
        if not (len(self.gains) == len(self.delays) == len(self.dopplers)):
            raise ValueError("gains, delays, dopplers must have equal length")
        if np.any(self.delays < 0):
            raise ValueError("path delays must be non-negative")

    @property
    def n_paths(self) -> int:
        return len(self.gains)

    def power(self) -> float:
        return float(np.sum(np.abs(self.gains) ** 2))


@dataclass(frozen=True)
class VehAProfile:
    """ITU Vehicular-A power-delay profile with a cosine Doppler spectrum."""

    delays_us: tuple = (0.0, 0.31, 0.71, 1.09, 1.73, 2.51)
    powers_db: tuple = (0.0, -1.0, -9.0, -10.0, -15.0, -20.0)
    nu_max_hz: float = 815.0

    @property
    def n_paths(self) -> int:
        return len(self.delays_us)

    @property
    def tau_max_s(self) -> float:
        return max(self.delays_us) * 1e-6

    def powers_linear(self) -> np.ndarray:
        """Per-path powers normalized to sum 1."""
        p = 10.0 ** (np.asarray(self.powers_db, dtype=np.float64) / 10.0)
        return p / p.sum()


def sample_veh_a(profile: VehAProfile, rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel realization from the profile.

    Delays are the fixed profile delays; Doppler per path is
    nu_max * cos(theta) with theta uniform on [0, 2pi); gains are complex
    Gaussian with per-path variance equal to the normalized profile power.
    """
    P = profile.n_paths
    p_lin = profile.powers_linear()
    theta = rng.uniform(0.0, 2.0 * np.pi, size=P)
    dopplers = profile.nu_max_hz * np.cos(theta)
    gains = np.sqrt(p_lin / 2.0) * (rng.standard_normal(P) + 1j * rng.standard_normal(P))
    delays = np.asarray(profile.delays_us, dtype=np.float64) * 1e-6
    return ChannelRealization(gains=gains, delays=delays, dopplers=dopplers)


def make_test_channel(taps) -> ChannelRealization:
    """Deterministic channel from explicit (gain, delay_s, doppler_hz) triples."""
    taps = list(taps)
    if not taps:
        raise ValueError("need at least one path")
    gains = np.array([t[0] for t in taps], dtype=np.complex128)
    delays = np.array([t[1] for t in taps], dtype=np.float64)
    dopplers = np.array([t[2] for t in taps], dtype=np.float64)
    return ChannelRealization(gains=gains, delays=delays, dopplers=dopplers)
