"""Read-off channel estimation, cancellation, and the turbo loop.

Because the cross-ambiguity of the received signal with a spread pilot
reproduces the effective channel around the origin (scaled by the pilot
amplitude), estimation is a read-off of ambiguity values inside a small
rhombus S, followed by a 3-sigma threshold that zeroes taps buried under
the data-plus-noise floor.

The turbo loop then alternates: cancel the detected data from the
received signal using the previous taps, re-estimate on the cleaner
signal, cancel the pilots with the new taps, and re-detect.  From the
first refinement on, the threshold is recomputed from the measured
residual power after data cancellation instead of the worst-case
data-plus-noise variance, so taps that were hidden at first become
recoverable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dd import (DDTaps, QuasiPeriodicSignal, cross_ambiguity,
                 place_data_symbols, twisted_conv_discrete, vectorize)
from .detector import DetectionConfig, build_block_matrix, detect
from .grid import DDGrid


def channel_support_bounds(grid: DDGrid):
    """Largest alias-free tap region: |k| <= 2M-1, |l| <= 2N-1 (inclusive)."""
    return (-2 * grid.M + 1, 2 * grid.M - 1, -2 * grid.N + 1, 2 * grid.N - 1)


@dataclass(frozen=True)
class ReadoffRegion:
    """Origin-centered rhombus |k|/d_k + |l|/d_l <= 1 (inclusive boundary)."""

    d_k: int = 8
    d_l: int = 10

    def __post_init__(self):
        if self.d_k < 1 or self.d_l < 1:
            raise ValueError("rhombus half-diagonals must be >= 1")

    def contains(self, k: int, l: int) -> bool:
        return abs(k) * self.d_l + abs(l) * self.d_k <= self.d_k * self.d_l

    def points(self):
        """All integer (k, l) inside the rhombus."""
        out = []
        for k in range(-self.d_k, self.d_k + 1):
            for l in range(-self.d_l, self.d_l + 1):
                if self.contains(k, l):
                    out.append((k, l))
        return out


def noise_floor_threshold(cfg: DetectionConfig, grid: DDGrid) -> float:
    """3-sigma tap threshold for the initial estimate.

    Under the no-tap hypothesis the read-off value is zero-mean with
    variance (1/MN)(1 + rho_d)/rho_p from the superimposed data and the
    channel noise; keep a tap only when it exceeds 3 standard deviations.
    """
    if cfg.e_p <= 0:
        raise ValueError("pilot energy must be positive for estimation")
    rho_d = cfg.e_d / (grid.MN * cfg.n0)
    rho_p = cfg.e_p / (grid.MN * cfg.n0)
    return 3.0 * np.sqrt((1.0 + rho_d) / (grid.MN * rho_p))


def residual_threshold(cfg: DetectionConfig, residual_power: float) -> float:
    """3-sigma threshold from measured per-sample residual power.

    Same derivation as the noise-floor rule with the worst-case
    data-plus-noise variance replaced by the measured residual after data
    cancellation: Var(h_hat) = (n_t / E_p) * P_residual.
    """
    if cfg.e_p <= 0:
        raise ValueError("pilot energy must be positive for estimation")
    return 3.0 * np.sqrt(cfg.n_t * max(residual_power, 0.0) / cfg.e_p)


def estimate_readoff(y_i: QuasiPeriodicSignal, x_s_j: QuasiPeriodicSignal,
                     cfg: DetectionConfig, region: ReadoffRegion,
                     threshold: float = None) -> DDTaps:
    """Read channel taps off the cross-ambiguity with one spread pilot.

    h_hat[k,l] = sqrt(n_t / E_p) * A_{y_i, x_s_j}[k,l] on the region;
    values at or below the threshold are set exactly to zero (taps keep
    their region positions).  threshold=None applies the noise-floor
    rule; pass 0.0 for a raw read-off.
    """
    if cfg.e_p <= 0:
        raise ValueError("pilot energy must be positive for estimation")
    grid = y_i.grid
    if threshold is None:
        threshold = noise_floor_threshold(cfg, grid)
    k_lags = np.arange(-region.d_k, region.d_k + 1)
    l_lags = np.arange(-region.d_l, region.d_l + 1)
    amb = cross_ambiguity(y_i, x_s_j, k_lags, l_lags)
    pts = region.points()
    kk = np.array([p[0] for p in pts], dtype=np.int64)
    ll = np.array([p[1] for p in pts], dtype=np.int64)
    vals = np.sqrt(cfg.n_t / cfg.e_p) * np.array(
        [amb.at(k, l) for k, l in pts], dtype=np.complex128)
    vals[np.abs(vals) <= threshold] = 0.0
    return DDTaps(grid=grid, k=kk, l=ll, values=vals)


def _pilot_reconstruction(taps_row, pilots, cfg: DetectionConfig) -> QuasiPeriodicSignal:
    grid = pilots[0].grid
    amp = np.sqrt(cfg.e_p / cfg.n_t)
    acc = QuasiPeriodicSignal(grid, np.zeros((grid.M, grid.N), dtype=np.complex128))
    for taps_j, x_s_j in zip(taps_row, pilots):
        acc = acc + twisted_conv_discrete(taps_j, x_s_j * amp)
    return acc


def cancel_pilot(y_i: QuasiPeriodicSignal, taps_row, pilots,
                 cfg: DetectionConfig) -> QuasiPeriodicSignal:
    """y_i minus the pilot contributions rebuilt from estimated taps.

    taps_row: estimated DDTaps per Tx antenna j for this Rx antenna.
    """
    return y_i - _pilot_reconstruction(taps_row, pilots, cfg)


def cancel_data(y_i: QuasiPeriodicSignal, taps_row, symbols,
                cfg: DetectionConfig) -> QuasiPeriodicSignal:
    """y_i minus the data contributions rebuilt from taps and symbols.

    symbols: detected constellation points, shape (n_t, M, N).
    """
    grid = y_i.grid
    amp = np.sqrt(cfg.e_d / cfg.n_t)
    out = y_i
    for taps_j, sym_j in zip(taps_row, symbols):
        if not np.any(sym_j):
            continue
        x_j = place_data_symbols(sym_j, grid) * amp
        out = out - twisted_conv_discrete(taps_j, x_j)
    return out


def nmse(est: DDTaps, truth: DDTaps, grid: DDGrid) -> float:
    """Normalized tap MSE in dB over the alias-free support region.

    Both tap sets are densified on |k| <= 2M-1, |l| <= 2N-1 (zeros where
    unspecified).  A perfect estimate returns the -300 dB floor; zero
    estimate returns 0 dB.
    """
    k_lo, k_hi, l_lo, l_hi = channel_support_bounds(grid)
    e = est.to_dense(k_lo, k_hi, l_lo, l_hi)
    t = truth.to_dense(k_lo, k_hi, l_lo, l_hi)
    ref = float(np.sum(np.abs(t) ** 2))
    if ref == 0.0:
        raise ValueError("true channel has zero energy on the support region")
    err = float(np.sum(np.abs(e - t) ** 2))
    if err == 0.0:
        return -300.0
    return max(10.0 * np.log10(err / ref), -300.0)


@dataclass
class EstimatorState:
    """Estimates after one turbo iteration: taps_grid[i][j] on S."""

    iteration: int
    threshold: float
    taps_grid: list


@dataclass
class TurboIterationMetrics:
    iteration: int
    threshold: float
    err_energy: float = np.nan    # sum over antenna pairs of |h_hat - h|^2 on S_o
    ref_energy: float = np.nan    # sum over antenna pairs of |h|^2 on S_o
    nmse_db: float = np.nan
    bit_errors: int = -1
    n_bits: int = -1


@dataclass
class TurboResult:
    taps_grid: list               # final DDTaps per (i, j)
    symbols: np.ndarray           # final detected symbols (n_t, M, N)
    metrics: list
    states: list = field(default_factory=list)


def _tap_error_energies(taps_grid, true_taps_grid, grid):
    k_lo, k_hi, l_lo, l_hi = channel_support_bounds(grid)
    err = 0.0
    ref = 0.0
    for row, true_row in zip(taps_grid, true_taps_grid):
        for est_ij, true_ij in zip(row, true_row):
            e = est_ij.to_dense(k_lo, k_hi, l_lo, l_hi)
            t = true_ij.to_dense(k_lo, k_hi, l_lo, l_hi)
            err += float(np.sum(np.abs(e - t) ** 2))
            ref += float(np.sum(np.abs(t) ** 2))
    return err, ref


def turbo_loop(ys, pilots, cfg: DetectionConfig, n_itr: int,
               region: ReadoffRegion = ReadoffRegion(),
               true_taps_grid=None, true_symbols=None,
               keep_states: bool = False) -> TurboResult:
    """Alternating estimation and detection, n_itr refinement passes.

    ys: received QuasiPeriodicSignal per Rx antenna.  pilots: spread
    pilot per Tx antenna.  Iteration 0 is the initial read-off (noise
    floor threshold) plus one detection; iterations >= 1 cancel the
    previously detected data, re-estimate with the measured-residual
    threshold, cancel pilots, and re-detect.  Metrics per iteration
    carry NMSE when true taps are given and bit errors when true
    symbols are given.
    """
    if n_itr < 0:
        raise ValueError("n_itr must be >= 0")
    grid = ys[0].grid
    n_r, n_t = len(ys), len(pilots)
    if n_t != cfg.n_t:
        raise ValueError(f"cfg.n_t = {cfg.n_t} but {n_t} pilots given")

    metrics = []
    states = []
    symbols = None
    taps_grid = None

    for t in range(n_itr + 1):
        if t == 0:
            threshold = noise_floor_threshold(cfg, grid)
            taps_grid = [[estimate_readoff(y_i, x_s_j, cfg, region, threshold=threshold)
                          for x_s_j in pilots] for y_i in ys]
        else:
            y_dc = [cancel_data(y_i, taps_grid[i], symbols, cfg)
                    for i, y_i in enumerate(ys)]
            raw = [[estimate_readoff(y_i, x_s_j, cfg, region, threshold=0.0)
                    for x_s_j in pilots] for y_i in y_dc]
            resid = np.mean([(y_i - _pilot_reconstruction(raw[i], pilots, cfg)).energy()
                             for i, y_i in enumerate(y_dc)]) / grid.MN
            threshold = residual_threshold(cfg, float(resid))
            taps_grid = []
            for row in raw:
                new_row = []
                for taps in row:
                    vals = taps.values.copy()
                    vals[np.abs(vals) <= threshold] = 0.0
                    new_row.append(DDTaps(grid=grid, k=taps.k, l=taps.l, values=vals))
                taps_grid.append(new_row)

        y_pc = [cancel_pilot(y_i, taps_grid[i], pilots, cfg) for i, y_i in enumerate(ys)]
        H_est = build_block_matrix(taps_grid, grid)
        y_vec = np.concatenate([vectorize(y_i) for y_i in y_pc])
        symbols = detect(H_est, y_vec, cfg)

        m = TurboIterationMetrics(iteration=t, threshold=float(threshold))
        if true_taps_grid is not None:
            m.err_energy, m.ref_energy = _tap_error_energies(taps_grid, true_taps_grid, grid)
            if m.ref_energy > 0:
                ratio = m.err_energy / m.ref_energy
                m.nmse_db = max(10.0 * np.log10(ratio), -300.0) if ratio > 0 else -300.0
        if true_symbols is not None:
            m.bit_errors = int(np.sum(symbols != np.asarray(true_symbols)))
            m.n_bits = int(n_t * grid.MN)
        metrics.append(m)
        if keep_states:
            states.append(EstimatorState(iteration=t, threshold=float(threshold),
                                         taps_grid=taps_grid))

    return TurboResult(taps_grid=taps_grid, symbols=symbols, metrics=metrics, states=states)
