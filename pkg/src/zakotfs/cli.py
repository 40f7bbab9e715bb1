"""Command-line front end.

Subcommands:
  simulate        run a Monte Carlo sweep from a TOML config
  validate-pilots check a pilot set's cross-ambiguity clearance of S
  verify-theorem  exhaustively compare predicted and brute-force supports
  ambiguity-map   dump |A| over a lag window as CSV (k, l, abs_value)
  taps            dump effective channel taps for one seeded realization
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .channel import sample_veh_a
from .dd import cross_ambiguity
from .filters import effective_channel_taps
from .grid import DDGrid
from .harness import (ConfigError, load_config, pilot_signals, run_sweep,
                      truth_tap_support, write_csv)
from .pilot import (SpreadPilotConfig, build_spread_pilot, predict_cross_support,
                    validate_pilot_set)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zakotfs")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo sweep from a config file")
    sim.add_argument("--config", required=True, help="TOML config path")
    sim.add_argument("--seed", type=int, default=None, help="override run.seed")
    sim.add_argument("--frames", type=int, default=None, help="override run.frames")
    sim.add_argument("--threads", type=int, default=None, help="override run.threads")
    sim.add_argument("--out", default=None, help="override output CSV path")

    vp = sub.add_parser("validate-pilots", help="check pilot-set lattice clearance")
    vp.add_argument("--config", required=True)

    vt = sub.add_parser("verify-theorem", help="exhaustive support check on small primes")
    vt.add_argument("--M", type=int, required=True)
    vt.add_argument("--N", type=int, required=True)
    vt.add_argument("--q", type=int, default=1)
    vt.add_argument("--offsets", type=int, default=2,
                    help="check pilot locations in {0..offsets}^2 (default 2)")

    am = sub.add_parser("ambiguity-map", help="dump |A| over lags as CSV")
    am.add_argument("--config", required=True)
    am.add_argument("--j", type=int, default=0, help="conjugated (reference) pilot index")
    am.add_argument("--v", type=int, default=0, help="received pilot index")
    am.add_argument("--k-max", type=int, default=None, help="lag window; default full period")
    am.add_argument("--l-max", type=int, default=None)
    am.add_argument("--out", required=True)

    tp = sub.add_parser("taps", help="dump effective channel taps for one realization")
    tp.add_argument("--config", required=True)
    tp.add_argument("--seed", type=int, default=None, help="override run.seed")
    tp.add_argument("--out", required=True)
    return ap


def _load(path: str, overrides: dict = None):
    try:
        return load_config(path, overrides)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(2) from None
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        raise SystemExit(2) from None


def _cmd_simulate(args) -> int:
    overrides = {"seed": args.seed, "frames": args.frames, "threads": args.threads}
    if args.out:
        overrides["out_csv"] = args.out
        root, _ = os.path.splitext(args.out)
        overrides["out_json"] = root + ".json"
    cfg = _load(args.config, overrides)

    done = {"frames": 0}

    def progress(_count, recs):
        done["frames"] += 1
        total = len(cfg.snr_db) * cfg.frames
        print(f"\rframe {done['frames']}/{total}", end="", file=sys.stderr, flush=True)

    rows = run_sweep(cfg, progress=progress)
    print(file=sys.stderr)
    hdr = f"{'snr_db':>7} {'pdr_db':>7} {'iter':>5} {'nmse_db':>9} {'ber':>12} {'frames':>7}"
    print(hdr)
    for r in rows:
        it = "csi" if r["iter"] < 0 else str(r["iter"])
        print(f"{r['snr_db']:>7.2f} {r['pdr_db']:>7.2f} {it:>5} "
              f"{r['nmse_db']:>9.2f} {r['ber']:>12.3e} {r['frames']:>7d}")
    if cfg.out_csv:
        print(f"wrote {cfg.out_csv}" + (f" and {cfg.out_json}" if cfg.out_json else ""))
    return 0


def _cmd_validate_pilots(args) -> int:
    cfg = _load(args.config)
    report = validate_pilot_set(cfg.pilots[:cfg.n_t], cfg.grid(), cfg.region())
    print(report)
    return 1 if report.verdict == "FAIL" else 0


def _cmd_verify_theorem(args) -> int:
    grid = DDGrid(M=args.M, N=args.N, nu_p=30e3)
    MN = grid.MN
    span = range(args.offsets + 1)
    locs = [(a, b) for a in span for b in span]
    signals = {loc: build_spread_pilot(SpreadPilotConfig(loc[0], loc[1], args.q), grid)
               for loc in locs}
    lags = np.arange(MN)
    n_pairs = 0
    worst = 0.0
    for loc_j in locs:
        for loc_v in locs:
            pred = predict_cross_support(SpreadPilotConfig(*loc_j, args.q),
                                         SpreadPilotConfig(*loc_v, args.q), grid)
            pred_pts = {(p.k_l, p.l_l) for p in pred}
            amb = cross_ambiguity(signals[loc_v], signals[loc_j], lags, lags)
            mag = np.abs(amb.values)
            on = np.zeros((MN, MN), dtype=bool)
            for (k, l) in pred_pts:
                on[k, l] = True
            dev = max(float(np.max(np.abs(mag[on] - 1.0))), float(np.max(mag[~on])))
            worst = max(worst, dev)
            if len(pred_pts) != MN or dev > 1e-9:
                print(f"FAIL: pilots {loc_j} vs {loc_v}: |support| = {len(pred_pts)}, "
                      f"max deviation {dev:.3e}")
                return 1
            n_pairs += 1
    print(f"M={args.M} N={args.N} q={args.q}: {n_pairs} pilot pairs verified; "
          f"each support has exactly {MN} points per {MN}x{MN} period; "
          f"max |A| deviation from 0/1: {worst:.2e}")
    return 0


def _cmd_ambiguity_map(args) -> int:
    cfg = _load(args.config)
    grid = cfg.grid()
    pilots = pilot_signals(cfg)
    if not (0 <= args.j < len(pilots) and 0 <= args.v < len(pilots)):
        print(f"error: pilot index out of range (have {len(pilots)})", file=sys.stderr)
        return 2
    k_max = grid.MN if args.k_max is None else min(args.k_max + 1, grid.MN)
    l_max = grid.MN if args.l_max is None else min(args.l_max + 1, grid.MN)
    amb = cross_ambiguity(pilots[args.v], pilots[args.j],
                          np.arange(k_max), np.arange(l_max))
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "l", "abs_value"])
        for ik, k in enumerate(amb.k_lags):
            for il, l in enumerate(amb.l_lags):
                w.writerow([int(k), int(l), abs(amb.values[ik, il])])
    print(f"wrote {args.out} ({k_max * l_max} lags)")
    return 0


def _cmd_taps(args) -> int:
    overrides = {"seed": args.seed} if args.seed is not None else {}
    cfg = _load(args.config, overrides)
    grid = cfg.grid()
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0, 0]))
    chan = sample_veh_a(cfg.profile, rng)
    taps = effective_channel_taps(chan, cfg.filter(), grid,
                                  truth_tap_support(grid, cfg.region()), cfg.quad)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "l", "re", "im", "abs_value"])
        for k, l, v in zip(taps.k, taps.l, taps.values):
            w.writerow([int(k), int(l), v.real, v.imag, abs(v)])
    print(f"wrote {args.out} ({len(taps.k)} taps)")
    return 0


def cli_main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "validate-pilots": _cmd_validate_pilots,
        "verify-theorem": _cmd_verify_theorem,
        "ambiguity-map": _cmd_ambiguity_map,
        "taps": _cmd_taps,
    }
    try:
        return handlers[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    except KeyboardInterrupt:
        print("interrupted; partial results flushed where configured", file=sys.stderr)
        return 130
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
