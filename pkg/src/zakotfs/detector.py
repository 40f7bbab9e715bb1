"""Vectorized MIMO I/O, MMSE equalization, and LAS detection.

The DD input-output relation for one antenna pair is a discrete twisted
convolution with the effective channel taps; on vectorized frames it
becomes an MN x MN matrix

    H_ij[k'N+l', kN+l] = sum_{n,m} h_eff,ij[k'-k-nM, l'-l-mN]
                         * exp(j 2 pi n l / N)
                         * exp(j 2 pi (l'-l-mN)(k+nM) / MN)

assembled into the n_r MN x n_t MN MIMO matrix by blocks.  Detection is
MMSE equalization followed by a 1-flip local search (LAS) on the BPSK
hypercube, with cost deltas maintained incrementally from the Gram
matrix diagonal and the running gradient H^H (y - H x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .dd import DDTaps
from .grid import DDGrid

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DetectionConfig:
    """Energies and detector knobs shared by detection and estimation.

    BPSK throughout: the transmitted vector entries are
    +-sqrt(e_d / (n_t MN)).
    """

    e_d: float
    e_p: float
    n0: float
    n_t: int
    max_las_steps: int = 10_000

    def __post_init__(self):
        if self.e_d < 0 or self.e_p < 0:
            raise ValueError("energies must be non-negative")
        if self.n0 <= 0:
            raise ValueError("noise variance must be positive")
        if self.n_t < 1:
            raise ValueError("need at least one Tx antenna")

    def symbol_scale(self, grid: DDGrid) -> float:
        return float(np.sqrt(self.e_d / (self.n_t * grid.MN)))


@dataclass
class BlockChannelMatrix:
    """Assembled MIMO channel matrix with block accessors."""

    grid: DDGrid
    n_r: int
    n_t: int
    matrix: np.ndarray   # (n_r MN, n_t MN)

    def block(self, i: int, j: int) -> np.ndarray:
        MN = self.grid.MN
        return self.matrix[i * MN:(i + 1) * MN, j * MN:(j + 1) * MN]


def _fill_block(out: np.ndarray, taps: DDTaps, grid: DDGrid) -> None:
    M, N, MN = grid.M, grid.N, grid.MN
    if np.any(np.abs(taps.k) > 2 * M - 1) or np.any(np.abs(taps.l) > 2 * N - 1):
        raise ValueError("taps outside |k| <= 2M-1, |l| <= 2N-1: alias sum would be lossy")
    k = np.arange(M, dtype=np.int64)
    l = np.arange(N, dtype=np.int64)
    col = (k[:, None] * N + l[None, :]).ravel()
    for kappa, lam, h in zip(taps.k, taps.l, taps.values):
        if h == 0:
            continue
        n = -((k + kappa) // M)                    # alias index keeping k' in [0, M)
        k_row = (k + kappa) % M
        m_l = (l + lam) % N
        row = (k_row[:, None] * N + m_l[None, :]).ravel()
        phase_k = np.exp(1j * TWO_PI * lam * (k + n * M) / MN)     # depends on column k
        phase_nl = np.exp(1j * TWO_PI * np.multiply.outer(n, l) / N)
        out[row, col] += h * (phase_k[:, None] * phase_nl).ravel()


def build_block_matrix(taps_grid, grid: DDGrid) -> BlockChannelMatrix:
    """Assemble the MIMO matrix from per-(rx, tx) effective channel taps.

    taps_grid: nested sequence taps_grid[i][j] (n_r rows of n_t DDTaps).
    """
    taps_grid = [list(row) for row in taps_grid]
    n_r = len(taps_grid)
    n_t = len(taps_grid[0])
    if any(len(row) != n_t for row in taps_grid):
        raise ValueError("ragged taps grid")
    MN = grid.MN
    H = np.zeros((n_r * MN, n_t * MN), dtype=np.complex128)
    for i in range(n_r):
        for j in range(n_t):
            _fill_block(H[i * MN:(i + 1) * MN, j * MN:(j + 1) * MN],
                        taps_grid[i][j], grid)
    return BlockChannelMatrix(grid=grid, n_r=n_r, n_t=n_t, matrix=H)


def _gram(H: np.ndarray) -> np.ndarray:
    """Full H^H H via the rank-k Hermitian BLAS update (half the flops)."""
    try:
        from scipy.linalg.blas import zherk
        G = zherk(1.0, np.asfortranarray(H), trans=2)   # upper triangle
        return G + np.triu(G, 1).conj().T
    except ImportError:
        return H.conj().T @ H


def mmse_equalize(H, y, cfg: DetectionConfig, gram: np.ndarray = None) -> np.ndarray:
    """Soft MMSE estimate (H^H H + (n_t N_0 / E_d) I)^{-1} H^H y."""
    Hm = H.matrix if isinstance(H, BlockChannelMatrix) else np.asarray(H)
    y = np.asarray(y, dtype=np.complex128).ravel()
    n = Hm.shape[1]
    if cfg.e_d == 0:
        return np.zeros(n, dtype=np.complex128)
    G = _gram(Hm) if gram is None else gram
    lam = cfg.n_t * cfg.n0 / cfg.e_d
    A = G + lam * np.eye(n)
    factor = cho_factor(A, lower=False, check_finite=False)
    return cho_solve(factor, Hm.conj().T @ y, check_finite=False)


def quantize(x_soft, scale: float) -> np.ndarray:
    """Nearest BPSK point: scale * sign(Re(x)), sign(0) = +1."""
    x_soft = np.asarray(x_soft)
    return np.where(np.real(x_soft) >= 0, scale, -scale).astype(np.complex128)


@dataclass
class LASResult:
    x: np.ndarray
    n_flips: int
    converged: bool       # False when the step budget ran out first
    cost: float


def las_search(H, y, x_init, cfg: DetectionConfig, gram: np.ndarray = None) -> LASResult:
    """1-flip local search on the BPSK hypercube from a quantized start.

    Accepts the most negative cost delta each step (lowest index on ties)
    until no single flip strictly decreases ||y - Hx||^2.
    """
    Hm = H.matrix if isinstance(H, BlockChannelMatrix) else np.asarray(H)
    y = np.asarray(y, dtype=np.complex128).ravel()
    x = np.asarray(x_init, dtype=np.complex128).copy()
    G = _gram(Hm) if gram is None else gram
    r = y - Hm @ x
    g = Hm.conj().T @ r
    cost = float(np.real(np.vdot(r, r)))
    g_diag = np.real(np.diag(G))
    tol = 1e-12 * max(cost, 1.0)       # guards against fp-noise flip cycles

    n_flips = 0
    converged = True
    while True:
        # delta cost of flipping entry i: x_i -> -x_i
        delta = 4.0 * np.real(np.conj(x) * g) + 4.0 * (np.abs(x) ** 2) * g_diag
        i = int(np.argmin(delta))
        if delta[i] >= -tol:
            break
        if n_flips >= cfg.max_las_steps:
            converged = False
            break
        g = g + 2.0 * x[i] * G[:, i]
        cost += float(delta[i])
        x[i] = -x[i]
        n_flips += 1
    return LASResult(x=x, n_flips=n_flips, converged=converged, cost=cost)


def detect(H: BlockChannelMatrix, y, cfg: DetectionConfig) -> np.ndarray:
    """MMSE + LAS detection; returns +-1 symbols, shape (n_t, M, N)."""
    grid = H.grid
    scale = cfg.symbol_scale(grid)
    G = _gram(H.matrix)
    soft = mmse_equalize(H, y, cfg, gram=G)
    x0 = quantize(soft, scale)
    res = las_search(H, y, x0, cfg, gram=G)
    bits = np.where(np.real(res.x) >= 0, 1.0, -1.0)
    return bits.reshape(H.n_t, grid.M, grid.N)
