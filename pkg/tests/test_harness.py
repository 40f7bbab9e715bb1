import csv
import dataclasses
import json
import os

import numpy as np
import pytest

import zakotfs.harness as harness
from zakotfs.cli import cli_main
from zakotfs.harness import (
    CSV_COLUMNS, PERFECT_CSI_ITER, THREADS_ENV_VAR, ConfigError,
    TrialRecord, aggregate, config_from_dict, load_config, run_frame,
    run_sweep, truth_tap_support, _frame_job,
)
from zakotfs import QuadratureSpec, ReadoffRegion


def tiny_raw():
    return {
        "grid": {"m": 5, "n": 7, "nu_p_hz": 30e3},
        "mimo": {"n_t": 1, "n_r": 1},
        "pilots": [{"k_p": 0, "l_p": 0, "q": 1}],
        "energy": {"snr_db": [15.0], "pdr_db": 5.0},
        "run": {"frames": 2, "n_itr": 1, "seed": 7},
        "readoff": {"d_k": 4, "d_l": 5},
    }


TINY_TOML = """
[grid]
m = 5
n = 7
nu_p_hz = 30e3

[mimo]
n_t = 1
n_r = 1

[[pilots]]
k_p = 0
l_p = 0
q = 1

[energy]
snr_db = [15.0]
pdr_db = 5.0

[run]
frames = 2
n_itr = 1
seed = 7

[readoff]
d_k = 4
d_l = 5
"""


# =========================================================================
# Config handling
# =========================================================================

def test_config_from_dict_roundtrip():
    cfg = config_from_dict(tiny_raw())
    assert (cfg.m, cfg.n, cfg.n_t, cfg.n_r) == (5, 7, 1, 1)
    assert cfg.snr_db == (15.0,)
    assert cfg.pdr_db == 5.0
    assert cfg.frames == 2 and cfg.n_itr == 1 and cfg.seed == 7
    assert cfg.d_k == 4 and cfg.d_l == 5
    assert cfg.pilots[0].k_p == 0 and cfg.pilots[0].q == 1


def test_config_missing_keys_are_reported():
    raw = tiny_raw()
    del raw["grid"]["m"]
    with pytest.raises(ConfigError, match="'m'"):
        config_from_dict(raw)
    raw = tiny_raw()
    del raw["pilots"]
    with pytest.raises(ConfigError, match="pilots"):
        config_from_dict(raw)
    raw = tiny_raw()
    del raw["energy"]["snr_db"]
    with pytest.raises(ConfigError, match="snr_db"):
        config_from_dict(raw)


def test_config_validation_errors():
    raw = tiny_raw()
    raw["energy"]["snr_db"] = []
    with pytest.raises(ConfigError, match="empty"):
        config_from_dict(raw)
    raw = tiny_raw()
    raw["mimo"]["n_t"] = 2        # only one pilot defined
    with pytest.raises(ConfigError, match="pilot"):
        config_from_dict(raw)
    raw = tiny_raw()
    raw["run"]["frames"] = 0
    with pytest.raises(ConfigError, match="frames"):
        config_from_dict(raw)


def test_cli_overrides_win():
    cfg = config_from_dict(tiny_raw(), overrides={"seed": 99, "frames": 1})
    assert cfg.seed == 99 and cfg.frames == 1


def test_env_thread_override(monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, "5")
    cfg = config_from_dict(tiny_raw())
    assert cfg.threads == 5


def test_load_config_missing_file(tmp_path):
    path = tmp_path / "nope.toml"
    with pytest.raises(FileNotFoundError, match=str(path)):
        load_config(str(path))


def test_shipped_configs_parse():
    here = os.path.join(os.path.dirname(__file__), "..", "configs")
    cfg = load_config(os.path.join(here, "fig4.toml"))
    assert (cfg.m, cfg.n) == (31, 37)
    assert cfg.n_t == 2 and cfg.n_r == 2
    assert cfg.snr_db == (9.0, 12.0, 15.0)
    assert cfg.n_itr == 3
    for name in ("fig3.toml", "fig3_1x1.toml", "fig5.toml", "ci_small.toml"):
        load_config(os.path.join(here, name))


def test_energies_follow_snr_and_pdr():
    cfg = config_from_dict(tiny_raw())
    e_d, e_p = cfg.energies(15.0)
    assert e_d == pytest.approx(10.0 ** 1.5 * 35)
    assert e_p == pytest.approx(10.0 ** 0.5 * e_d)
    det = cfg.detection_config(15.0)
    assert det.e_d == pytest.approx(e_d) and det.n_t == 1


def test_truth_tap_support_covers_region_with_margin(grid3137):
    sup = truth_tap_support(grid3137, ReadoffRegion(8, 10))
    ks = [k for k, _ in sup]
    ls = [l for _, l in sup]
    assert (min(ks), max(ks)) == (-16, 16)
    assert (min(ls), max(ls)) == (-18, 18)
    assert len(sup) == 33 * 37


# =========================================================================
# Frames and sweeps
# =========================================================================

def drop_wall(rec: TrialRecord):
    d = dataclasses.asdict(rec)
    d.pop("wall_ms")
    return d


def test_run_frame_is_deterministic():
    cfg = config_from_dict(tiny_raw())
    a = _frame_job((cfg, 0, 15.0, 0))
    b = _frame_job((cfg, 0, 15.0, 0))
    assert [drop_wall(r) for r in a] == [drop_wall(r) for r in b]
    assert len(a) == cfg.n_itr + 1
    assert [r.iteration for r in a] == [0, 1]
    assert all(r.seed == "7:0:0" for r in a)


def test_run_frame_wraps_failures():
    cfg = config_from_dict(tiny_raw())
    bad = dataclasses.replace(
        cfg, quad=QuadratureSpec(step_fraction=4.0, verify_convergence=True))
    rng = np.random.default_rng(0)
    with pytest.raises(RuntimeError, match="frame failed"):
        run_frame(bad, rng, snr_db=15.0, seed_label="x:0:0")


def test_aggregate_mean_linear_nmse_and_csi_row():
    cfg = config_from_dict(tiny_raw())
    recs = [
        TrialRecord(seed="7:0:0", snr_db=15.0, pdr_db=5.0, iteration=0,
                    nmse_db=-10.0, nmse_ratio=0.1, bit_errors=7, bits=70,
                    wall_ms=1.0, csi_bit_errors=1),
        TrialRecord(seed="7:0:1", snr_db=15.0, pdr_db=5.0, iteration=0,
                    nmse_db=-30.0, nmse_ratio=0.001, bit_errors=0, bits=70,
                    wall_ms=3.0, csi_bit_errors=1),
    ]
    rows = aggregate(cfg, recs)
    assert len(rows) == 2
    it0 = rows[0]
    assert it0["iter"] == 0
    assert it0["nmse_db"] == pytest.approx(10 * np.log10(0.0505))
    assert it0["ber"] == pytest.approx(7 / 140)
    assert it0["frames"] == 2
    csi = rows[1]
    assert csi["iter"] == PERFECT_CSI_ITER
    assert csi["ber"] == pytest.approx(2 / 140)


def test_run_sweep_rows_and_outputs(tmp_path):
    raw = tiny_raw()
    raw["output"] = {"csv": str(tmp_path / "out.csv"),
                     "json": str(tmp_path / "out.json")}
    cfg = config_from_dict(raw)
    rows = run_sweep(cfg)
    # one row per iteration plus the perfect-CSI row
    assert [r["iter"] for r in rows] == [0, 1, PERFECT_CSI_ITER]
    assert all(r["frames"] == 2 for r in rows)

    with open(tmp_path / "out.csv", newline="") as fh:
        rd = csv.DictReader(fh)
        assert rd.fieldnames == list(CSV_COLUMNS)
        got = list(rd)
    assert len(got) == 3
    assert float(got[0]["nmse_db"]) == pytest.approx(rows[0]["nmse_db"])

    doc = json.load(open(tmp_path / "out.json"))
    assert doc["provenance"]["package"] == "zakotfs"
    assert doc["provenance"]["seed"] == 7
    assert doc["config"]["m"] == 5
    assert doc["columns"] == list(CSV_COLUMNS)
    assert len(doc["rows"]) == 3


def test_run_sweep_deterministic_across_thread_counts():
    cfg = config_from_dict(tiny_raw())
    rows_serial = run_sweep(cfg)
    rows_pool = run_sweep(dataclasses.replace(cfg, threads=2))
    for a, b in zip(rows_serial, rows_pool):
        for col in ("snr_db", "pdr_db", "iter", "nmse_db", "ber", "frames"):
            assert a[col] == pytest.approx(b[col], nan_ok=True)


def test_interrupt_flushes_partial_results(tmp_path, monkeypatch):
    raw = tiny_raw()
    raw["run"]["frames"] = 3
    raw["output"] = {"csv": str(tmp_path / "partial.csv")}
    cfg = config_from_dict(raw)

    real = harness.run_frame
    calls = {"n": 0}

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] >= 2:
            raise KeyboardInterrupt
        return real(*args, **kwargs)

    monkeypatch.setattr(harness, "run_frame", flaky)
    with pytest.raises(KeyboardInterrupt):
        run_sweep(cfg)
    with open(tmp_path / "partial.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows                        # first frame made it out
    assert all(r["frames"] == "1" for r in rows)


# =========================================================================
# CLI
# =========================================================================

def write_tiny_config(tmp_path):
    p = tmp_path / "tiny.toml"
    p.write_text(TINY_TOML)
    return str(p)


def test_cli_missing_config_exits_2(tmp_path, capsys):
    missing = str(tmp_path / "absent.toml")
    code = cli_main(["simulate", "--config", missing])
    assert code == 2
    assert missing in capsys.readouterr().err


def test_cli_simulate_writes_outputs(tmp_path, capsys):
    cfg_path = write_tiny_config(tmp_path)
    out = str(tmp_path / "rows.csv")
    code = cli_main(["simulate", "--config", cfg_path, "--frames", "1", "--out", out])
    assert code == 0
    with open(out, newline="") as fh:
        rd = csv.DictReader(fh)
        assert rd.fieldnames == list(CSV_COLUMNS)
        assert len(list(rd)) == 3
    assert os.path.exists(str(tmp_path / "rows.json"))
    assert "csi" in capsys.readouterr().out


def test_cli_validate_pilots(tmp_path, capsys):
    good = tmp_path / "good.toml"
    good.write_text(TINY_TOML.replace("m = 5", "m = 31").replace("n = 7", "n = 37")
                    .replace("n_t = 1", "n_t = 2")
                    .replace("d_k = 4", "d_k = 8").replace("d_l = 5", "d_l = 10")
                    + "\n[[pilots]]\nk_p = 1\nl_p = 0\nq = 1\n")
    assert cli_main(["validate-pilots", "--config", str(good)]) == 0
    assert "PASS" in capsys.readouterr().out

    bad = tmp_path / "bad.toml"
    bad.write_text(TINY_TOML.replace("m = 5", "m = 31").replace("n = 7", "n = 37")
                   .replace("n_t = 1", "n_t = 2")
                   .replace("d_k = 4", "d_k = 8").replace("d_l = 5", "d_l = 10")
                   + "\n[[pilots]]\nk_p = 4\nl_p = 4\nq = 1\n")
    assert cli_main(["validate-pilots", "--config", str(bad)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_cli_verify_theorem(capsys):
    assert cli_main(["verify-theorem", "--M", "5", "--N", "7", "--offsets", "1"]) == 0
    out = capsys.readouterr().out
    assert "16 pilot pairs" in out and "35 points" in out
    # non-prime M is a precondition violation, reported not raised
    assert cli_main(["verify-theorem", "--M", "6", "--N", "7"]) == 1


def test_cli_ambiguity_map(tmp_path):
    cfg_path = write_tiny_config(tmp_path)
    out = str(tmp_path / "amb.csv")
    code = cli_main(["ambiguity-map", "--config", cfg_path,
                     "--k-max", "6", "--l-max", "6", "--out", out])
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "l", "abs_value"]
    assert len(rows) == 1 + 49
    # self-ambiguity at zero lag is the pilot energy, 1
    assert float(rows[1][2]) == pytest.approx(1.0, abs=1e-9)


def test_cli_taps(tmp_path):
    cfg_path = write_tiny_config(tmp_path)
    out = str(tmp_path / "taps.csv")
    assert cli_main(["taps", "--config", cfg_path, "--out", out]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "l", "re", "im", "abs_value"]
    assert len(rows) > 1
