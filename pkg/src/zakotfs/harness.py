"""Experiment orchestration: config, seeded Monte Carlo sweeps, CSV/JSON output.

Frames are synthesized directly in the discrete DD domain: true effective
taps from the quadrature, y = H x + n with white complex Gaussian noise of
variance N_0 per DD sample, so the data SNR rho_d = E_d / (MN N_0) holds
exactly.  Every frame also runs a paired perfect-CSI detection on the same
realization, which turns BER-gap measurements into low-variance paired
comparisons.

Per-frame RNG streams derive from SeedSequence([seed, point, frame]), so
results are independent of worker count and frames can replay in isolation.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .channel import VehAProfile, sample_veh_a
from .dd import devectorize, place_data_symbols, vectorize
from .detector import DetectionConfig, build_block_matrix, detect
from .estimator import ReadoffRegion, cancel_pilot, channel_support_bounds, turbo_loop
from .filters import GaussianSincFilter, QuadratureSpec, effective_channel_taps
from .grid import DDGrid
from .pilot import SpreadPilotConfig, build_spread_pilot

THREADS_ENV_VAR = "ZAKOTFS_THREADS"

CSV_COLUMNS = ("snr_db", "pdr_db", "iter", "nmse_db", "ber", "frames", "wall_ms")

PERFECT_CSI_ITER = -1   # row marker for the paired perfect-CSI baseline


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Full experiment description; see configs/ for the file schema."""

    m: int
    n: int
    nu_p_hz: float
    n_t: int
    n_r: int
    pilots: tuple                     # SpreadPilotConfig per Tx, length >= n_t
    snr_db: tuple                     # sweep axis, data SNR points in dB
    pdr_db: float
    frames: int
    n_itr: int
    seed: int
    n0: float = 1.0
    threads: int = 1
    d_k: int = 8
    d_l: int = 10
    filter_alpha: float = 0.044
    filter_omega: float = 1.0278
    profile: VehAProfile = VehAProfile()
    quad: QuadratureSpec = QuadratureSpec()
    out_csv: str = ""
    out_json: str = ""
    label: str = ""

    def __post_init__(self):
        if self.n_t < 1 or self.n_r < 1:
            raise ConfigError("n_t and n_r must be >= 1")
        if len(self.pilots) < self.n_t:
            raise ConfigError(f"{self.n_t} Tx antennas need {self.n_t} pilot configs, "
                              f"got {len(self.pilots)}")
        if len(self.snr_db) == 0:
            raise ConfigError("snr_db sweep axis is empty")
        if self.frames < 1:
            raise ConfigError("frames must be >= 1")
        if self.n_itr < 0:
            raise ConfigError("n_itr must be >= 0")
        grid = self.grid()
        for p in self.pilots[:self.n_t]:
            p.validate_for(grid)

    def grid(self) -> DDGrid:
        return DDGrid(M=self.m, N=self.n, nu_p=self.nu_p_hz)

    def filter(self) -> GaussianSincFilter:
        g = self.grid()
        return GaussianSincFilter(B=g.B, T=g.T,
                                  alpha_tau=self.filter_alpha, alpha_nu=self.filter_alpha,
                                  omega_tau=self.filter_omega, omega_nu=self.filter_omega)

    def region(self) -> ReadoffRegion:
        return ReadoffRegion(d_k=self.d_k, d_l=self.d_l)

    def energies(self, snr_db: float):
        """(E_d, E_p) for one data-SNR point, N_0 = self.n0 reference."""
        e_d = (10.0 ** (snr_db / 10.0)) * self.m * self.n * self.n0
        e_p = (10.0 ** (self.pdr_db / 10.0)) * e_d
        return e_d, e_p

    def detection_config(self, snr_db: float) -> DetectionConfig:
        e_d, e_p = self.energies(snr_db)
        return DetectionConfig(e_d=e_d, e_p=e_p, n0=self.n0, n_t=self.n_t)


def _get(table: dict, key: str, kind, default=None, where: str = ""):
    if key not in table:
        if default is not None:
            return default
        raise ConfigError(f"missing config key '{key}'{' in ' + where if where else ''}")
    return kind(table[key])


def config_from_dict(raw: dict, overrides: dict = None) -> SimConfig:
    """Build a SimConfig from parsed TOML tables (+ CLI overrides)."""
    overrides = overrides or {}
    grid_t = raw.get("grid", {})
    mimo_t = raw.get("mimo", {})
    energy_t = raw.get("energy", {})
    run_t = raw.get("run", {})
    readoff_t = raw.get("readoff", {})
    filt_t = raw.get("filter", {})
    quad_t = raw.get("quadrature", {})
    chan_t = raw.get("channel", {})
    out_t = raw.get("output", {})

    pilots = tuple(SpreadPilotConfig(k_p=int(p["k_p"]), l_p=int(p["l_p"]),
                                     q=int(p.get("q", 1)))
                   for p in raw.get("pilots", []))
    if not pilots:
        raise ConfigError("no [[pilots]] entries in config")

    snr = energy_t.get("snr_db", None)
    if snr is None:
        raise ConfigError("missing config key 'snr_db' in [energy]")
    snr = tuple(float(s) for s in (snr if isinstance(snr, (list, tuple)) else [snr]))

    profile = VehAProfile(
        delays_us=tuple(chan_t.get("delays_us", VehAProfile.delays_us)),
        powers_db=tuple(chan_t.get("powers_db", VehAProfile.powers_db)),
        nu_max_hz=float(chan_t.get("nu_max_hz", VehAProfile.nu_max_hz)))
    quad = QuadratureSpec(
        k_tau=float(quad_t.get("k_tau", 16.0)),
        k_nu=float(quad_t.get("k_nu", 16.0)),
        step_fraction=float(quad_t.get("step_fraction", 0.125)))

    cfg = dict(
        m=_get(grid_t, "m", int, where="[grid]"),
        n=_get(grid_t, "n", int, where="[grid]"),
        nu_p_hz=_get(grid_t, "nu_p_hz", float, where="[grid]"),
        n_t=_get(mimo_t, "n_t", int, where="[mimo]"),
        n_r=_get(mimo_t, "n_r", int, where="[mimo]"),
        pilots=pilots,
        snr_db=snr,
        pdr_db=_get(energy_t, "pdr_db", float, where="[energy]"),
        n0=float(energy_t.get("n0", 1.0)),
        frames=_get(run_t, "frames", int, where="[run]"),
        n_itr=_get(run_t, "n_itr", int, where="[run]"),
        seed=_get(run_t, "seed", int, where="[run]"),
        threads=int(run_t.get("threads", 1)),
        d_k=int(readoff_t.get("d_k", 8)),
        d_l=int(readoff_t.get("d_l", 10)),
        filter_alpha=float(filt_t.get("alpha", 0.044)),
        filter_omega=float(filt_t.get("omega", 1.0278)),
        profile=profile,
        quad=quad,
        out_csv=str(out_t.get("csv", "")),
        out_json=str(out_t.get("json", "")),
        label=str(raw.get("label", "")),
    )
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if THREADS_ENV_VAR in os.environ:
        cfg["threads"] = int(os.environ[THREADS_ENV_VAR])
    return SimConfig(**cfg)


def load_config(path: str, overrides: dict = None) -> SimConfig:
    try:
        import tomllib
    except ImportError:
        import tomli as tomllib
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return config_from_dict(raw, overrides)


# =========================================================================
# Per-frame simulation
# =========================================================================

@dataclass
class TrialRecord:
    seed: str                 # "root:point:frame" replay label
    snr_db: float
    pdr_db: float
    iteration: int
    nmse_db: float
    nmse_ratio: float         # linear err/ref, the quantity averaged across frames
    bit_errors: int
    bits: int
    wall_ms: float
    csi_bit_errors: int       # paired perfect-CSI detection on the same realization


_pilot_cache: dict = {}


def pilot_signals(cfg: SimConfig):
    key = (cfg.m, cfg.n, cfg.nu_p_hz, cfg.pilots[:cfg.n_t])
    if key not in _pilot_cache:
        grid = cfg.grid()
        _pilot_cache[key] = [build_spread_pilot(p, grid) for p in cfg.pilots[:cfg.n_t]]
    return _pilot_cache[key]


def truth_tap_support(grid: DDGrid, region: ReadoffRegion, margin: int = 8):
    """Rectangle around the read-off region that holds all non-negligible taps.

    The Gaussian-sinc filter tails put < 1e-9 of the tap energy outside
    region + margin bins for the supported channel profiles.
    """
    k_lo, k_hi, l_lo, l_hi = channel_support_bounds(grid)
    k_max = min(region.d_k + margin, k_hi)
    l_max = min(region.d_l + margin, l_hi)
    return [(k, l) for k in range(-k_max, k_max + 1) for l in range(-l_max, l_max + 1)]


def run_frame(cfg: SimConfig, rng: np.random.Generator, snr_db: float = None,
              seed_label: str = "") -> list:
    """One Monte Carlo frame; returns a TrialRecord per turbo iteration."""
    t_start = time.perf_counter()
    snr = cfg.snr_db[0] if snr_db is None else snr_db
    grid = cfg.grid()
    filt = cfg.filter()
    region = cfg.region()
    det = cfg.detection_config(snr)
    e_d, e_p = cfg.energies(snr)
    pilots = pilot_signals(cfg)
    support = truth_tap_support(grid, region)

    try:
        true_taps = [[effective_channel_taps(sample_veh_a(cfg.profile, rng),
                                             filt, grid, support, cfg.quad)
                      for _ in range(cfg.n_t)] for _ in range(cfg.n_r)]
        bits = rng.integers(0, 2, size=(cfg.n_t, grid.M, grid.N)) * 2.0 - 1.0

        x_vec = np.concatenate([
            vectorize(place_data_symbols(bits[j], grid) * np.sqrt(e_d / cfg.n_t)
                      + pilots[j] * np.sqrt(e_p / cfg.n_t))
            for j in range(cfg.n_t)])
        H_true = build_block_matrix(true_taps, grid)
        noise = np.sqrt(cfg.n0 / 2.0) * (
            rng.standard_normal(cfg.n_r * grid.MN)
            + 1j * rng.standard_normal(cfg.n_r * grid.MN))
        y_vec = H_true.matrix @ x_vec + noise
        ys = [devectorize(y_vec[i * grid.MN:(i + 1) * grid.MN], grid)
              for i in range(cfg.n_r)]

        res = turbo_loop(ys, pilots, det, cfg.n_itr, region,
                         true_taps_grid=true_taps, true_symbols=bits)

        y_pc = [cancel_pilot(ys[i], true_taps[i], pilots, det) for i in range(cfg.n_r)]
        csi_sym = detect(H_true, np.concatenate([vectorize(y) for y in y_pc]), det)
        csi_errors = int(np.sum(csi_sym != bits))
    except Exception as exc:
        raise RuntimeError(f"frame failed (seed {seed_label or cfg.seed}, "
                           f"snr {snr} dB): {exc}") from exc

    wall_ms = 1e3 * (time.perf_counter() - t_start) / len(res.metrics)
    records = []
    for m in res.metrics:
        ratio = (m.err_energy / m.ref_energy) if m.ref_energy > 0 else np.nan
        records.append(TrialRecord(
            seed=seed_label, snr_db=snr, pdr_db=cfg.pdr_db, iteration=m.iteration,
            nmse_db=m.nmse_db, nmse_ratio=ratio, bit_errors=m.bit_errors,
            bits=m.n_bits, wall_ms=wall_ms, csi_bit_errors=csi_errors))
    return records


def _frame_job(args) -> list:
    cfg, point_idx, snr, frame_idx = args
    ss = np.random.SeedSequence([cfg.seed, point_idx, frame_idx])
    rng = np.random.default_rng(ss)
    return run_frame(cfg, rng, snr_db=snr,
                     seed_label=f"{cfg.seed}:{point_idx}:{frame_idx}")


# =========================================================================
# Sweeps, aggregation, persistence
# =========================================================================

def aggregate(cfg: SimConfig, records: list) -> list:
    """Per (SNR point, iteration) rows plus a perfect-CSI row per point."""
    rows = []
    for snr in cfg.snr_db:
        point = [r for r in records if r.snr_db == snr]
        if not point:
            continue
        by_frame = {r.seed for r in point}
        n_frames = len(by_frame)
        for it in sorted({r.iteration for r in point}):
            sel = [r for r in point if r.iteration == it]
            ratios = [r.nmse_ratio for r in sel if np.isfinite(r.nmse_ratio)]
            nmse_db = (10.0 * np.log10(max(np.mean(ratios), 1e-30))
                       if ratios else float("nan"))
            bits = sum(r.bits for r in sel if r.bits > 0)
            errs = sum(r.bit_errors for r in sel if r.bit_errors >= 0)
            rows.append({
                "snr_db": snr, "pdr_db": cfg.pdr_db, "iter": it,
                "nmse_db": float(nmse_db),
                "ber": (errs / bits) if bits > 0 else float("nan"),
                "frames": n_frames,
                "wall_ms": float(np.mean([r.wall_ms for r in sel])),
            })
        last_iter = max(r.iteration for r in point)
        final = [r for r in point if r.iteration == last_iter]
        bits = sum(r.bits for r in final if r.bits > 0)
        csi_errs = sum(r.csi_bit_errors for r in final if r.csi_bit_errors >= 0)
        rows.append({
            "snr_db": snr, "pdr_db": cfg.pdr_db, "iter": PERFECT_CSI_ITER,
            "nmse_db": -300.0,
            "ber": (csi_errs / bits) if bits > 0 else float("nan"),
            "frames": n_frames,
            "wall_ms": float(np.mean([r.wall_ms for r in final])),
        })
    return rows


def write_csv(rows: list, path: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(CSV_COLUMNS))
        w.writeheader()
        for r in rows:
            w.writerow({c: r[c] for c in CSV_COLUMNS})


def write_json(rows: list, cfg: SimConfig, path: str, extra: dict = None) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    doc = {
        "provenance": {
            "package": "zakotfs",
            "version": __version__,
            "seed": cfg.seed,
            "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            **(extra or {}),
        },
        "config": asdict(cfg),
        "columns": list(CSV_COLUMNS),
        "rows": rows,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def run_sweep(cfg: SimConfig, progress=None) -> list:
    """All frames for all sweep points; returns (and persists) the row table.

    Partial results are flushed to the configured outputs if interrupted.
    """
    jobs = [(cfg, pi, snr, fi)
            for pi, snr in enumerate(cfg.snr_db)
            for fi in range(cfg.frames)]
    records = []
    interrupted = False
    try:
        if cfg.threads > 1:
            with ProcessPoolExecutor(max_workers=cfg.threads) as ex:
                for recs in ex.map(_frame_job, jobs, chunksize=1):
                    records.extend(recs)
                    if progress:
                        progress(len(records), recs)
        else:
            for job in jobs:
                recs = _frame_job(job)
                records.extend(recs)
                if progress:
                    progress(len(records), recs)
    except KeyboardInterrupt:
        interrupted = True

    rows = aggregate(cfg, records)
    if cfg.out_csv:
        write_csv(rows, cfg.out_csv)
    if cfg.out_json:
        write_json(rows, cfg, cfg.out_json,
                   extra={"interrupted": interrupted} if interrupted else None)
    if interrupted:
        raise KeyboardInterrupt(f"interrupted after {len(records)} records; "
                                f"partial results flushed")
    return rows
