"""Discrete delay-Doppler signal algebra.

Quasi-periodic signals on an M x N fundamental grid, MN-periodic signals on
the MN x MN torus, twisted convolutions, cross-ambiguity surfaces, and the
(k,l) <-> kN+l vectorization used by the block channel matrices.

Conventions
-----------
Indexing is zero-based everywhere.  A quasi-periodic signal is stored by its
fundamental samples only; extended samples obey

    x[k + n*M, l + m*N] = fund[k, l] * exp(j 2 pi n l / N)

and are materialized on demand.  The discrete twisted convolution is

    (a * b)[k, l] = sum_{k', l'} a[k-k', l-l'] b[k', l'] exp(j 2 pi k'(l-l')/MN)

which makes the phase couple b's delay with a's Doppler (applying b first,
then a, in operator order).  The MN-periodic variant sums both indices over
one MN period with phase exp(j 2 pi l'(k-k')/MN).
"""

from dataclasses import dataclass

import numpy as np

from .grid import DDGrid

TWO_PI = 2.0 * np.pi


# =========================================================================
# Signal containers
# =========================================================================

@dataclass(frozen=True)
class QuasiPeriodicSignal:
    """DD signal determined by its M x N fundamental samples."""

    grid: DDGrid
    fund: np.ndarray

    def __post_init__(self):
        fund = np.asarray(self.fund, dtype=np.complex128)
        if fund.shape != (self.grid.M, self.grid.N):
            raise ValueError(
                f"fundamental samples must be ({self.grid.M}, {self.grid.N}), "
                f"got {fund.shape}"
            )
        object.__setattr__(self, "fund", fund)

    def ext(self, k, l):
        """Extended sample values at integer offsets (k, l), vectorized.

        Applies the quasi-periodic extension rule; k and l may be any
        integers (arrays broadcast together).
        """
        k = np.asarray(k)
        l = np.asarray(l)
        M, N = self.grid.M, self.grid.N
        kf = np.mod(k, M)
        n = (k - kf) // M
        lf = np.mod(l, N)
        return self.fund[kf, lf] * np.exp(1j * TWO_PI * n * lf / N)

    def ext_window(self, k_lo, k_hi, l_lo, l_hi):
        """Dense extended samples on [k_lo, k_hi] x [l_lo, l_hi] (inclusive)."""
        ks = np.arange(k_lo, k_hi + 1)
        ls = np.arange(l_lo, l_hi + 1)
        return self.ext(ks[:, None], ls[None, :])

    def energy(self) -> float:
        """Energy of the fundamental-domain samples."""
        return float(np.sum(np.abs(self.fund) ** 2))

    def __add__(self, other):
        _check_same_grid(self.grid, other.grid)
        return QuasiPeriodicSignal(self.grid, self.fund + other.fund)

    def __sub__(self, other):
        _check_same_grid(self.grid, other.grid)
        return QuasiPeriodicSignal(self.grid, self.fund - other.fund)

    def __mul__(self, scalar):
        return QuasiPeriodicSignal(self.grid, self.fund * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class PeriodicDDSignal:
    """MN-periodic DD signal; samples indexed modulo MN in both axes."""

    period: int
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.shape != (self.period, self.period):
            raise ValueError(
                f"samples must be ({self.period}, {self.period}), got {samples.shape}"
            )
        object.__setattr__(self, "samples", samples)

    def at(self, k, l):
        """Sample values at integer offsets, reduced modulo the period."""
        return self.samples[np.mod(k, self.period), np.mod(l, self.period)]

    def period_energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class DDTaps:
    """Finite set of DD impulses: values at integer (delay, Doppler) offsets.

    Used both for effective-channel taps and for sparse test signals. Offsets
    may be negative; duplicates are not allowed.
    """

    grid: DDGrid
    k: np.ndarray
    l: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=np.int64).ravel()
        l = np.asarray(self.l, dtype=np.int64).ravel()
        values = np.asarray(self.values, dtype=np.complex128).ravel()
        if not (k.shape == l.shape == values.shape):
            raise ValueError("k, l, values must have identical lengths")
        if len(k) and len(np.unique(np.stack([k, l], axis=1), axis=0)) != len(k):
            raise ValueError("duplicate (k, l) offsets in tap set")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    def to_dense(self, k_lo, k_hi, l_lo, l_hi):
        """Dense array over [k_lo, k_hi] x [l_lo, l_hi]; taps outside are dropped."""
        out = np.zeros((k_hi - k_lo + 1, l_hi - l_lo + 1), dtype=np.complex128)
        keep = (self.k >= k_lo) & (self.k <= k_hi) & (self.l >= l_lo) & (self.l <= l_hi)
        out[self.k[keep] - k_lo, self.l[keep] - l_lo] = self.values[keep]
        return out

    def value_at(self, k, l) -> complex:
        hit = (self.k == k) & (self.l == l)
        if not hit.any():
            return 0.0 + 0.0j
        return complex(self.values[hit][0])


@dataclass(frozen=True)
class AmbiguitySurface:
    """Cross-ambiguity values over a rectangle of integer lags."""

    grid: DDGrid
    k_lags: np.ndarray
    l_lags: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        k_lags = np.asarray(self.k_lags, dtype=np.int64).ravel()
        l_lags = np.asarray(self.l_lags, dtype=np.int64).ravel()
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (len(k_lags), len(l_lags)):
            raise ValueError(
                f"values shape {values.shape} does not match lag ranges "
                f"({len(k_lags)}, {len(l_lags)})"
            )
        object.__setattr__(self, "k_lags", k_lags)
        object.__setattr__(self, "l_lags", l_lags)
        object.__setattr__(self, "values", values)

    def at(self, k, l) -> complex:
        ik = np.searchsorted(self.k_lags, k)
        il = np.searchsorted(self.l_lags, l)
        if ik >= len(self.k_lags) or self.k_lags[ik] != k:
            raise KeyError(f"lag k={k} not on this surface")
        if il >= len(self.l_lags) or self.l_lags[il] != l:
            raise KeyError(f"lag l={l} not on this surface")
        return complex(self.values[ik, il])


def _check_same_grid(g1: DDGrid, g2: DDGrid):
    if g1.M != g2.M or g1.N != g2.N:
        raise ValueError(f"grid mismatch: ({g1.M},{g1.N}) vs ({g2.M},{g2.N})")


# =========================================================================
# Twisted convolutions
# =========================================================================

def twisted_conv_discrete(a, b, support=None) -> QuasiPeriodicSignal:
    """Discrete twisted convolution, fundamental-domain output.

    (a * b)[k,l] = sum_{k',l'} a[k-k', l-l'] b[k',l'] exp(j 2 pi k'(l-l')/MN).

    Either argument may be a finite tap set (DDTaps) or a QuasiPeriodicSignal;
    at least one must be a tap set unless an explicit rectangular truncation
    `support` = (k_lo, k_hi, l_lo, l_hi) for the (k', l') sum is given.  With
    a tap set on either side the sum is exact (no truncation).
    """
    if isinstance(b, DDTaps):
        grid = b.grid
        if isinstance(a, DDTaps):
            return _conv_taps_taps(a, b)
        _check_same_grid(a.grid, grid)
        return _conv_signal_taps(a, b)
    if isinstance(a, DDTaps):
        _check_same_grid(a.grid, b.grid)
        return _conv_taps_signal(a, b)
    if support is None:
        raise ValueError(
            "twisted_conv_discrete of two quasi-periodic signals sums over an "
            "infinite lattice; pass support=(k_lo, k_hi, l_lo, l_hi) to truncate"
        )
    return _conv_signal_signal(a, b, support)


def _conv_signal_taps(a: QuasiPeriodicSignal, b: DDTaps) -> QuasiPeriodicSignal:
    # sum over b's taps at (k', l'); a enters at shifted, extended positions
    grid = a.grid
    M, N, MN = grid.M, grid.N, grid.MN
    k = np.arange(M)[:, None]
    l = np.arange(N)[None, :]
    out = np.zeros((M, N), dtype=np.complex128)
    for kp, lp, v in zip(b.k, b.l, b.values):
        if v == 0:
            continue
        out += v * a.ext(k - kp, l - lp) * np.exp(1j * TWO_PI * kp * (l - lp) / MN)
    return QuasiPeriodicSignal(grid, out)


def _conv_taps_signal(a: DDTaps, b: QuasiPeriodicSignal) -> QuasiPeriodicSignal:
    # change of variables: sum over a's taps at (kappa, lam) with b extended;
    # the defining phase k'(l-l') becomes (k-kappa)*lam
    grid = b.grid
    M, N, MN = grid.M, grid.N, grid.MN
    k = np.arange(M)[:, None]
    l = np.arange(N)[None, :]
    out = np.zeros((M, N), dtype=np.complex128)
    for kap, lam, v in zip(a.k, a.l, a.values):
        if v == 0:
            continue
        out += v * b.ext(k - kap, l - lam) * np.exp(1j * TWO_PI * (k - kap) * lam / MN)
    return QuasiPeriodicSignal(grid, out)


def _conv_taps_taps(a: DDTaps, b: DDTaps) -> DDTaps:
    _check_same_grid(a.grid, b.grid)
    MN = a.grid.MN
    acc = {}
    for kap, lam, va in zip(a.k, a.l, a.values):
        for kp, lp, vb in zip(b.k, b.l, b.values):
            key = (int(kap + kp), int(lam + lp))
            ph = np.exp(1j * TWO_PI * kp * lam / MN)
            acc[key] = acc.get(key, 0.0) + va * vb * ph
    ks = np.array([p[0] for p in acc], dtype=np.int64)
    ls = np.array([p[1] for p in acc], dtype=np.int64)
    vals = np.array(list(acc.values()), dtype=np.complex128)
    return DDTaps(a.grid, ks, ls, vals)


def _conv_signal_signal(a, b, support) -> QuasiPeriodicSignal:
    k_lo, k_hi, l_lo, l_hi = support
    grid = a.grid
    _check_same_grid(grid, b.grid)
    M, N, MN = grid.M, grid.N, grid.MN
    k = np.arange(M)[:, None]
    l = np.arange(N)[None, :]
    out = np.zeros((M, N), dtype=np.complex128)
    for kp in range(k_lo, k_hi + 1):
        for lp in range(l_lo, l_hi + 1):
            bv = b.ext(kp, lp)
            if bv == 0:
                continue
            out += bv * a.ext(k - kp, l - lp) * np.exp(1j * TWO_PI * kp * (l - lp) / MN)
    return QuasiPeriodicSignal(grid, out)


def twisted_conv_periodic(a: PeriodicDDSignal, b: PeriodicDDSignal) -> PeriodicDDSignal:
    """MN-periodic twisted convolution.

    (a . b)[k,l] = sum_{k'=0}^{MN-1} sum_{l'=0}^{MN-1}
                   a[k',l'] b[k-k',l-l'] exp(j 2 pi l'(k-k')/MN)
    """
    if a.period != b.period:
        raise ValueError(f"period mismatch: {a.period} vs {b.period}")
    MN = a.period
    idx = np.arange(MN)
    out = np.zeros((MN, MN), dtype=np.complex128)
    # loop over k' only; inner ops vectorized over (l', k, l) via rolls
    for kp in range(MN):
        # b[k-kp, l-l'] as array over (l', k, l): roll b along axis 0 by kp,
        # then index [k, l-l']
        b_k = np.roll(b.samples, kp, axis=0)  # b_k[k, j] = b[k-kp, j]
        phase_k = np.exp(1j * TWO_PI * idx * (idx[:, None] - kp) / MN)  # [k, l'] -> e^{j2pi l'(k-kp)/MN}
        for lp in range(MN):
            col = a.samples[kp, lp]
            if col == 0:
                continue
            out += col * b_k[:, np.mod(idx - lp, MN)] * phase_k[:, lp][:, None]
    return PeriodicDDSignal(MN, out)


# =========================================================================
# Cross-ambiguity
# =========================================================================

def cross_ambiguity(a: QuasiPeriodicSignal, b: QuasiPeriodicSignal,
                    k_lags, l_lags) -> AmbiguitySurface:
    """Cross-ambiguity of two quasi-periodic signals over integer lags.

    A_{a,b}[k,l] = sum_{k'=0}^{M-1} sum_{l'=0}^{N-1}
                   a[k',l'] b*[k'-k, l'-l] exp(-j 2 pi l (k'-k)/MN)

    The sum runs over the fundamental domain of a; b is evaluated through its
    quasi-periodic extension.  A_{a,a}[0,0] is the fundamental-domain energy.
    """
    _check_same_grid(a.grid, b.grid)
    grid = a.grid
    M, N, MN = grid.M, grid.N, grid.MN
    k_lags = np.asarray(k_lags, dtype=np.int64).ravel()
    l_lags = np.asarray(l_lags, dtype=np.int64).ravel()

    # dense extension window of b covering k'-k and l'-l for all requested lags
    k_lo = 0 - int(k_lags.max())
    k_hi = (M - 1) - int(k_lags.min())
    l_lo = 0 - int(l_lags.max())
    l_hi = (N - 1) - int(l_lags.min())
    b_ext = b.ext_window(k_lo, k_hi, l_lo, l_hi)

    kp = np.arange(M)
    lp = np.arange(N)
    # columns of the b window gathered once per delay lag, all Doppler lags at a time
    cols = lp[:, None] - l_lags[None, :] - l_lo          # (N, nl)
    values = np.empty((len(k_lags), len(l_lags)), dtype=np.complex128)
    for ik, k in enumerate(k_lags):
        bb = b_ext[(kp - k - k_lo)[:, None, None], cols[None, :, :]]   # (M, N, nl)
        phase = np.exp(-1j * TWO_PI * l_lags[None, :] * (kp - k)[:, None] / MN)  # (M, nl)
        values[ik, :] = np.einsum("mn,mnl,ml->l", a.fund, np.conj(bb), phase)
    return AmbiguitySurface(grid, k_lags, l_lags, values)


# =========================================================================
# Symbol placement and vectorization
# =========================================================================

def place_data_symbols(symbols, grid: DDGrid) -> QuasiPeriodicSignal:
    """Scale an M x N constellation array by 1/sqrt(MN) onto the grid.

    Unit-average-energy constellations then give unit-average frame energy.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.shape != (grid.M, grid.N):
        raise ValueError(f"symbols must be ({grid.M}, {grid.N}), got {symbols.shape}")
    return QuasiPeriodicSignal(grid, symbols / np.sqrt(grid.MN))


def vectorize(x: QuasiPeriodicSignal) -> np.ndarray:
    """Stack fundamental samples as v[k*N + l] = fund[k, l]."""
    return x.fund.reshape(x.grid.MN).copy()


def devectorize(v, grid: DDGrid) -> QuasiPeriodicSignal:
    v = np.asarray(v, dtype=np.complex128).ravel()
    if len(v) != grid.MN:
        raise ValueError(f"vector length {len(v)} != MN = {grid.MN}")
    return QuasiPeriodicSignal(grid, v.reshape(grid.M, grid.N))
