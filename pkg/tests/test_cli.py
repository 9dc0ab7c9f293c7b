"""End-to-end command-line runs through a subprocess: exit codes, the
diagnostics CSV layout, report files, and the dyadic rescale guard."""

import csv
import json
import os
import subprocess
import sys

CLI = [sys.executable, "-m", "ymklab.cli"]

CSV_COLUMNS = ["t", "ym", "ymk", "bym", "ym_rho_k", "grad_norm", "sup_F",
               "local_lp_max", "smooth_q1", "smooth_q2"]


def _run(args, **kw):
    return subprocess.run(CLI + args, capture_output=True, text=True, **kw)


def _write_config(path, **overrides):
    cfg = {
        "grid": {"sizes": [16, 16], "lengths": [1.0, 1.0]},
        "group": "su2",
        "init": {"kind": "random_band_limited", "band": 2,
                 "amplitude": 0.3, "seed": 5},
        "flow": {"k": 0, "rho": 0.0, "integrator": "euler",
                 "dt": None, "cfl_safety": None, "t_max": 2e-3},
        "monitor": {"sample_interval": 10, "snapshot_interval": 2,
                    "ball_radius": 0.125, "scan_stride": 4, "q_max": 2,
                    "sup_ceiling": 1e6},
    }
    cfg.update(overrides)
    with open(path, "w") as fh:
        json.dump(cfg, fh)
    return path


def test_run_writes_csv_report_and_snapshots(tmp_path):
    cfgp = _write_config(os.path.join(tmp_path, "cfg.json"))
    out = os.path.join(tmp_path, "out")
    res = _run(["run", "--config", cfgp, "--out", out, "--quiet"])
    assert res.returncode == 0, res.stderr

    with open(os.path.join(out, "diagnostics.csv")) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_COLUMNS
    assert len(rows) >= 3
    times = [float(r[0]) for r in rows[1:]]
    assert times[0] == 0.0 and times == sorted(times)
    energies = [float(r[4]) for r in rows[1:]]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))

    with open(os.path.join(out, "report.json")) as fh:
        report = json.load(fh)
    assert report["blowup"] is False
    assert report["steps"] >= 1

    snaps = [f for f in os.listdir(out) if f.endswith(".bin")]
    assert snaps, "snapshot_interval 2 over the run must leave snapshots"


def test_run_with_blowup_flags_it_and_still_exits_zero(tmp_path):
    cfgp = _write_config(
        os.path.join(tmp_path, "cfg.json"),
        monitor={"sample_interval": 5, "snapshot_interval": 0,
                 "ball_radius": 0.125, "scan_stride": 4, "q_max": 2,
                 "sup_ceiling": 1e-6})
    out = os.path.join(tmp_path, "out")
    res = _run(["run", "--config", cfgp, "--out", out, "--quiet"])
    assert res.returncode == 0, res.stderr
    with open(os.path.join(out, "report.json")) as fh:
        report = json.load(fh)
    assert report["blowup"] is True
    assert report["blowup_info"]["sup_F"] > 0.0


def test_bad_config_exits_two(tmp_path):
    cfgp = os.path.join(tmp_path, "cfg.json")
    with open(cfgp, "w") as fh:
        json.dump({"grid": {"sizes": [16, 16], "lengths": [1.0, 1.0]},
                   "group": "su2",
                   "init": {"kind": "random_band_limited", "band": 2,
                            "amplitude": 0.3, "seed": 5},
                   "flow": {"integraptor": "euler"}}, fh)
    res = _run(["run", "--config", cfgp, "--out",
                os.path.join(tmp_path, "out")])
    assert res.returncode == 2
    assert "integraptor" in res.stderr or "unknown" in res.stderr.lower()


def test_missing_config_exits_three(tmp_path):
    res = _run(["run", "--config", os.path.join(tmp_path, "nope.json"),
                "--out", os.path.join(tmp_path, "out")])
    assert res.returncode == 3


def test_verify_passes_and_writes_a_report(tmp_path):
    outp = os.path.join(tmp_path, "verify.json")
    res = _run(["verify", "--trials", "5", "--seed", "1",
                "--out", outp, "--quiet"])
    assert res.returncode == 0, res.stderr
    with open(outp) as fh:
        rep = json.load(fh)
    assert rep["summary"]["pass"] is True
    assert all(entry["pass"] for entry in rep["suite"].values()
               if isinstance(entry, dict) and "pass" in entry)
    assert all(entry["pass"] for entry in rep["scaling"].values())


def test_gradcheck_and_gaugecheck_pass(tmp_path):
    res = _run(["gradcheck", "--k", "1", "--size", "16", "--trials", "3",
                "--out", os.path.join(tmp_path, "grad.json"), "--quiet"])
    assert res.returncode == 0, res.stderr
    res = _run(["gaugecheck", "--trials", "3", "--size", "16",
                "--out", os.path.join(tmp_path, "gauge.json"), "--quiet"])
    assert res.returncode == 0, res.stderr


def test_rescale_requires_a_dyadic_factor(tmp_path):
    cfgp = _write_config(os.path.join(tmp_path, "cfg.json"))
    out = os.path.join(tmp_path, "out")
    res = _run(["run", "--config", cfgp, "--out", out, "--quiet"])
    assert res.returncode == 0, res.stderr
    snap = next(os.path.join(out, f[:-4]) for f in sorted(os.listdir(out))
                if f.endswith(".bin"))

    ok = _run(["rescale", "--snapshot", snap, "--lam", "0.5",
               "--out", os.path.join(tmp_path, "zoomed"), "--quiet"])
    assert ok.returncode == 0, ok.stderr
    assert os.path.exists(os.path.join(tmp_path, "zoomed.bin"))

    bad = _run(["rescale", "--snapshot", snap, "--lam", "0.3",
                "--out", os.path.join(tmp_path, "zoomed2")])
    assert bad.returncode == 2
