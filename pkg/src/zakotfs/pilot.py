"""Spread chirp pilots and exact prediction of their ambiguity supports.

A spread pilot is a unit-energy point pilot at (k_p, l_p) pushed through
the unimodular MN-periodic chirp filter

    w_q[a, b] = (1/MN) exp(j 2 pi q (a^2 + b^2) / MN)

under periodic twisted convolution.  The result has constant magnitude
1/sqrt(MN) on the fundamental domain, so the pilot rides under the data
at low power everywhere instead of puncturing a region.

For M, N odd primes and gcd(q, MN) = 1, the self-ambiguity of a spread
pilot is supported on an invertible image of the period lattice, and the
cross-ambiguity of two equal-slope pilots lives on a shift of that
lattice.  Both supports are computed here by exact modular arithmetic;
predict_cross_support additionally rederives the set from the raw
congruence conditions and insists the two agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dd import PeriodicDDSignal, QuasiPeriodicSignal
from .grid import DDGrid

TWO_PI = 2.0 * np.pi

MAX_MODULUS = 2 ** 31


@dataclass(frozen=True)
class SpreadPilotConfig:
    """Point-pilot location and chirp slope for one Tx antenna."""

    k_p: int
    l_p: int
    q: int = 1

    def validate_for(self, grid: DDGrid) -> None:
        if not (0 <= self.k_p < grid.M and 0 <= self.l_p < grid.N):
            raise ValueError(
                f"pilot location ({self.k_p}, {self.l_p}) outside [0,{grid.M})x[0,{grid.N})")
        # a slope with gcd(2q, MN) > 1 has no sparse ambiguity lattice, so
        # read-off estimation cannot work with it; reject at config time
        g = math.gcd(2 * self.q, grid.MN)
        if g != 1:
            raise ValueError(
                f"chirp slope q={self.q} unusable on a {grid.M}x{grid.N} grid: "
                f"gcd(2q, MN) = {g} != 1")


@dataclass(frozen=True)
class LatticePoint:
    """Ambiguity-support point (k_l, l_l) mod MN with an optional phase.

    theta_l is only meaningful for self-ambiguity points; it is 0 at the
    origin and obtained numerically elsewhere when a study needs it.
    """

    k_l: int
    l_l: int
    theta_l: float = 0.0


def mod_inverse(a: int, modulus: int) -> int:
    """Inverse of a modulo modulus, in [0, modulus)."""
    a = int(a) % int(modulus)
    try:
        return pow(a, -1, int(modulus))
    except ValueError:
        raise ValueError(f"{a} is not invertible modulo {modulus} "
                         f"(gcd = {math.gcd(a, int(modulus))})") from None


def _is_odd_prime(n: int) -> bool:
    if n < 3 or n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _check_theorem_preconditions(cfg: SpreadPilotConfig, grid: DDGrid) -> None:
    M, N = grid.M, grid.N
    if M * N > MAX_MODULUS:
        raise ValueError(f"MN = {M * N} exceeds supported modulus {MAX_MODULUS}")
    if not (_is_odd_prime(M) and _is_odd_prime(N)) or M == N:
        raise ValueError(f"lattice prediction requires distinct odd primes M, N; got ({M}, {N})")
    if math.gcd(cfg.q, M) != 1 or math.gcd(cfg.q, N) != 1:
        raise ValueError(f"slope q = {cfg.q} must be coprime to M = {M} and N = {N}")


# =========================================================================
# Pilot construction
# =========================================================================

def chirp_filter(q: int, grid: DDGrid) -> PeriodicDDSignal:
    """MN-periodic discrete chirp w_q with unit per-period energy."""
    MN = grid.MN
    idx = np.arange(MN, dtype=np.int64)
    sq = np.mod(idx * idx, MN)
    r = np.mod(q * (sq[:, None] + sq[None, :]), MN)
    return PeriodicDDSignal(MN, np.exp(1j * TWO_PI * r / MN) / MN)


def point_pilot_periodic(cfg: SpreadPilotConfig, grid: DDGrid) -> PeriodicDDSignal:
    """Periodization of the unit point pilot's quasi-periodic extension."""
    cfg.validate_for(grid)
    M, N, MN = grid.M, grid.N, grid.MN
    samples = np.zeros((MN, MN), dtype=np.complex128)
    for n in range(N):
        phase = np.exp(1j * TWO_PI * n * cfg.l_p / N)
        for m in range(M):
            samples[cfg.k_p + n * M, cfg.l_p + m * N] = phase
    return PeriodicDDSignal(MN, samples)


def build_spread_pilot(cfg: SpreadPilotConfig, grid: DDGrid) -> QuasiPeriodicSignal:
    """Fundamental-domain samples of the spread pilot (closed form).

    x_s[k,l] = sum_{n,m} w_q[k-k_p-nM, l-l_p-mN]
               * exp(j 2 pi n l_p / N) * exp(j 2 pi (l-l_p-mN)(k_p+nM)/MN)

    Unit fundamental-domain energy; |x_s[k,l]| = 1/sqrt(MN) everywhere.
    """
    cfg.validate_for(grid)
    M, N, MN = grid.M, grid.N, grid.MN
    k = np.arange(M, dtype=np.int64)[:, None, None, None]
    l = np.arange(N, dtype=np.int64)[None, :, None, None]
    n = np.arange(N, dtype=np.int64)[None, None, :, None]
    m = np.arange(M, dtype=np.int64)[None, None, None, :]
    a = k - cfg.k_p - n * M
    b = l - cfg.l_p - m * N
    # all exponents reduced mod MN as integers before hitting exp
    r = np.mod(cfg.q * (a * a + b * b) + b * (cfg.k_p + n * M) + n * cfg.l_p * M, MN)
    fund = np.exp(1j * TWO_PI * r / MN).sum(axis=(2, 3)) / MN
    return QuasiPeriodicSignal(grid, fund)


# =========================================================================
# Ambiguity-support prediction
# =========================================================================

def _theta(q: int, MN: int) -> int:
    return (mod_inverse(2 * q, MN) - 2 * q) % MN


def _affine_lattice(q: int, MN: int, M: int, N: int, shift_k: int, shift_l: int):
    """Points c^{-1} (U [nM; mN] + shift) mod MN, U = [[theta, 1], [1, 2q]], c = 4q^2."""
    theta = _theta(q, MN)
    c_inv = mod_inverse(4 * q * q, MN)
    n = np.arange(N, dtype=np.int64)[:, None]
    m = np.arange(M, dtype=np.int64)[None, :]
    kk = np.mod(c_inv * (theta * n * M + m * N + shift_k), MN)
    ll = np.mod(c_inv * (n * M + 2 * q * m * N + shift_l), MN)
    return set(zip(kk.ravel().tolist(), ll.ravel().tolist()))


def predict_self_support(cfg: SpreadPilotConfig, grid: DDGrid) -> set:
    """Self-ambiguity support of a spread pilot over one MN x MN period.

    Exactly MN points: the invertible affine image of {(nM, mN)}.  Always
    contains the origin (n = m = 0).
    """
    _check_theorem_preconditions(cfg, grid)
    pts = _affine_lattice(cfg.q, grid.MN, grid.M, grid.N, 0, 0)
    return {LatticePoint(k, l) for (k, l) in pts}


def predict_cross_support(cfg_j: SpreadPilotConfig, cfg_v: SpreadPilotConfig,
                          grid: DDGrid) -> set:
    """Cross-ambiguity support (pilot v received, pilot j conjugated).

    Derived twice and cross-checked: from the congruences

        2q (k + k_pj - k_pv) - l = 0 (mod M)
        theta l - 2q (l_pj - l_pv) - k = 0 (mod N)

    and from the shifted-lattice closed form.  The set is the self-support
    lattice translated by a constant offset.
    """
    _check_theorem_preconditions(cfg_j, grid)
    _check_theorem_preconditions(cfg_v, grid)
    M, N, MN = grid.M, grid.N, grid.MN
    q = cfg_j.q % MN
    if q != cfg_v.q % MN:
        raise ValueError(f"support prediction needs equal slopes; got {cfg_j.q} and {cfg_v.q}")
    dk = cfg_j.k_p - cfg_v.k_p
    dl = cfg_j.l_p - cfg_v.l_p
    theta = _theta(q, MN)

    # congruence scan over one period: the first condition pins l mod M,
    # so enumerate k in [0, MN) against the N candidates per k
    k = np.arange(MN, dtype=np.int64)[:, None]
    s = np.arange(N, dtype=np.int64)[None, :]
    l = np.mod(2 * q * (k + dk), M) + s * M
    keep = np.mod(theta * l - 2 * q * dl - k, N) == 0
    kk = np.broadcast_to(k, l.shape)[keep]
    scanned = set(zip(kk.tolist(), l[keep].tolist()))

    shifted = _affine_lattice(q, MN, M, N,
                              shift_k=2 * q * theta * dk - 2 * q * dl,
                              shift_l=2 * q * dk - 4 * q * q * dl)
    if scanned != shifted:
        raise RuntimeError("congruence scan and shifted-lattice form disagree; "
                           "preconditions violated or arithmetic bug")
    return {LatticePoint(k, l) for (k, l) in scanned}


# =========================================================================
# Pilot-set validation
# =========================================================================

@dataclass(frozen=True)
class PilotPairCheck:
    """Distance report for one ordered pilot pair (conjugated j, received v)."""

    j: int
    v: int
    min_distance: int
    nearest_point: tuple
    verdict: str


@dataclass(frozen=True)
class PilotSetReport:
    verdict: str
    margin: int
    pairs: tuple

    def __str__(self):
        lines = [f"pilot set: {self.verdict} (margin {self.margin} bins)"]
        for p in self.pairs:
            lines.append(
                f"  pair (j={p.j}, v={p.v}): min Chebyshev distance to read-off region "
                f"= {p.min_distance} at lattice point {p.nearest_point} -> {p.verdict}")
        if not self.pairs:
            lines.append("  single pilot: no cross terms")
        return "\n".join(lines)


def _centered(x: int, MN: int) -> int:
    return (x + MN // 2) % MN - MN // 2


def validate_pilot_set(cfgs, grid: DDGrid, region, margin: int = 4) -> PilotSetReport:
    """Check that no cross-ambiguity lattice point lands in or near S.

    region: read-off region exposing points() -> iterable of (k, l).  For
    every ordered pair of distinct pilots the predicted cross lattice is
    wrapped to centered representatives and its minimum Chebyshev distance
    to the region is computed.  Distance 0 (inside S) fails; within margin
    warns (effective-channel spread around the lattice point can leak in);
    otherwise passes.
    """
    cfgs = list(cfgs)
    MN = grid.MN
    s_pts = np.asarray(list(region.points()), dtype=np.int64)
    checks = []
    worst = "PASS"
    rank = {"PASS": 0, "WARN": 1, "FAIL": 2}
    for j in range(len(cfgs)):
        for v in range(len(cfgs)):
            if j == v:
                continue
            pts = predict_cross_support(cfgs[j], cfgs[v], grid)
            best_d, best_pt = None, None
            for p in pts:
                ck = _centered(p.k_l, MN)
                cl = _centered(p.l_l, MN)
                d = int(np.min(np.maximum(np.abs(s_pts[:, 0] - ck),
                                          np.abs(s_pts[:, 1] - cl))))
                if best_d is None or d < best_d:
                    best_d, best_pt = d, (ck, cl)
            if best_d == 0:
                verdict = "FAIL"
            elif best_d <= margin:
                verdict = "WARN"
            else:
                verdict = "PASS"
            if rank[verdict] > rank[worst]:
                worst = verdict
            checks.append(PilotPairCheck(j=j, v=v, min_distance=best_d,
                                         nearest_point=best_pt, verdict=verdict))
    return PilotSetReport(verdict=worst, margin=margin, pairs=tuple(checks))
