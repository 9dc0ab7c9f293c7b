"""Command line driver.

    ymklab run        integrate a flow from a JSON config
    ymklab verify     run the structural identity suite and symbol checks
    ymklab gradcheck  directional-derivative test of the discrete gradient
    ymklab gaugecheck energy invariance and curvature conjugation on random
                      gauge pairs
    ymklab rescale    dyadic zoom of a stored snapshot

Exit codes: 0 success (a flagged blowup still exits 0; the flag lives in
the report), 1 a check failed, 2 config or argument violation, 3 I/O
failure.  Set YMKLAB_THREADS to cap the thread pools of the numeric
backends; it must be read before numpy spins them up, so prefer setting it
in the environment of the calling shell.
"""

import json
import math
import os
import sys

if "YMKLAB_THREADS" in os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["YMKLAB_THREADS"])

import click
import numpy as np

from . import __version__
from .algebra import StructureGroup, frobenius_sup, inner_product, \
    random_connection
from .calculus import curvature
from .config import (ConfigError, build_flow_config, build_grid, build_group,
                     build_initial, load_config)
from .energy import (bym_energy, directional_derivative_check, ym_energy,
                     ymk_energy)
from .flow import (DiagnosticsRecord, cfl_timestep, normalized_zoom,
                   rescale_snapshot, run_flow, smoothing_report)
from .gauge import act_on_connection, act_on_form, random_gauge
from .grid import TorusGrid
from .identities import (check_scaling_lp, check_symbol, divisible_filter,
                         run_identity_suite)
from .snapshots import read_snapshot, write_snapshot

EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _say(quiet, msg):
    if not quiet:
        click.echo(msg)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


@click.group()
@click.version_option(__version__)
def main():
    """Numerical laboratory for curvature k-energies and their flows."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(), help="JSON run configuration.")
@click.option("--out", "out_dir", default="out", show_default=True,
              type=click.Path(), help="Output directory.")
@click.option("--seed", default=None, type=int,
              help="Override the init seed.")
@click.option("--quiet", is_flag=True, default=False)
def run(config_path, out_dir, seed, quiet):
    """Integrate the configured flow; write diagnostics CSV, snapshots,
    and a JSON report."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        click.echo(f"cannot read config: {exc}", err=True)
        sys.exit(EXIT_IO)

    try:
        os.makedirs(out_dir, exist_ok=True)
        grid = build_grid(cfg)
        group = build_group(cfg)
        gamma0, used_seed = build_initial(cfg, grid, group, seed)
        fcfg = build_flow_config(cfg, used_seed)
        dt = fcfg.dt if fcfg.dt is not None else cfl_timestep(
            grid, fcfg.k, fcfg.cfl_safety, gradient_scale=fcfg.rho)
        _say(quiet, f"run: {grid.describe()} group={group.name} "
                    f"k={fcfg.k} integrator={fcfg.integrator} dt={dt:.3e} "
                    f"t_max={fcfg.t_max} seed={used_seed}")

        csv_path = os.path.join(out_dir, "diagnostics.csv")
        snap_count = [0]
        with open(csv_path, "w", newline="") as csv_fh:
            csv_fh.write(",".join(DiagnosticsRecord.CSV_COLUMNS) + "\n")

            def on_record(rec):
                csv_fh.write(",".join(rec.csv_row()) + "\n")

            def on_snapshot(st):
                base = os.path.join(out_dir,
                                    f"snap_{st.step_index:08d}")
                write_snapshot(base, st.gamma, st.t, fcfg.k,
                               {"seed": used_seed,
                                "step_index": st.step_index})
                snap_count[0] += 1

            state, records = run_flow(gamma0, fcfg,
                                      on_record=on_record,
                                      on_snapshot=on_snapshot)

        final_base = os.path.join(out_dir, "final")
        write_snapshot(final_base, state.gamma, state.t, fcfg.k,
                       {"seed": used_seed, "step_index": state.step_index})
        smooth = smoothing_report(records, fcfg.k, fcfg.q_max)
        last = records[-1]
        report = {
            "config": cfg,
            "seed": used_seed,
            "dt": dt,
            "steps": state.step_index,
            "t_final": state.t,
            "blowup": state.blown_up,
            "blowup_info": state.blowup_info,
            "final": {"ym": last.ym, "ymk": last.ymk, "bym": last.bym,
                      "ym_rho_k": last.ym_rho_k,
                      "grad_norm": last.grad_norm, "sup_F": last.sup_F,
                      "local_lp_max": last.local_lp_max},
            "smoothing": {str(q): v for q, v in smooth.items()},
            "snapshots_written": snap_count[0],
            "records": len(records),
        }
        _write_json(os.path.join(out_dir, "report.json"), report)
    except OSError as exc:
        click.echo(f"i/o failure: {exc}", err=True)
        sys.exit(EXIT_IO)
    if state.blown_up:
        _say(quiet, f"blowup flagged at t={state.t:.6g} "
                    f"(info: {state.blowup_info}); outputs in {out_dir}")
    else:
        _say(quiet, f"done: t={state.t:.6g} grad_norm={last.grad_norm:.3e} "
                    f"outputs in {out_dir}")
    sys.exit(0)


@main.command()
@click.option("--out", "out_path", default="verify_report.json",
              show_default=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--trials", default=50, show_default=True, type=int)
@click.option("--quiet", is_flag=True, default=False)
def verify(out_path, seed, trials, quiet):
    """Identity suite, symbol checks, and scaling spot checks; JSON
    manifest out, nonzero exit if anything fails."""
    suite = run_identity_suite(seed=seed, trials=trials, verbose=not quiet)
    summary = suite.pop("_summary")
    ok = summary["pass"]

    grid2 = TorusGrid((32, 32), (2 * math.pi, 2 * math.pi))
    grid3 = TorusGrid((16, 16, 16), (2 * math.pi,) * 3)
    symbols = {}
    for group in (StructureGroup.u1(), StructureGroup.su2()):
        for k in range(4):
            rep2 = check_symbol(grid2, group, (3, 1), k)
            rep3 = check_symbol(grid3, group, (2, 1, 1), k)
            for tag, rep in (("d2", rep2), ("d3", rep3)):
                key = f"{group.name}_k{k}_{tag}"
                rep["pass"] = (rep["agree_main"] <= 1e-12
                               and rep["agree_gauge"] <= 1e-12
                               and rep["full_resid"] <= 1e-12
                               and rep["psd_defect"] <= 1e-12
                               and rep["kernel_dim"] == rep["expected_kernel"]
                               and rep["full_is_definite"])
                symbols[key] = rep
                ok = ok and rep["pass"]

    rng = np.random.default_rng(seed)
    gamma = divisible_filter(
        random_connection(TorusGrid((32, 32), (1.0, 1.0)),
                          StructureGroup.su2(), 4, 0.5, rng), 2)
    center = (0.5, 0.5)
    scaling = {}
    lp = check_scaling_lp(gamma, 0, 2, 0.5, center, 0.5, region="box")
    scaling["box_p2"] = {**lp, "pass": abs(lp["measured"] - lp["expected"]) < 1e-8}
    ok = ok and scaling["box_p2"]["pass"]

    report = {"suite": suite, "symbols": symbols, "scaling": scaling,
              "summary": {**summary, "pass": ok}}
    try:
        _write_json(out_path, report)
    except OSError as exc:
        click.echo(f"i/o failure: {exc}", err=True)
        sys.exit(EXIT_IO)
    _say(quiet, f"verify: {'PASS' if ok else 'FAIL'} -> {out_path}")
    sys.exit(0 if ok else EXIT_CHECK_FAILED)


@main.command()
@click.option("--k", default=0, show_default=True, type=int)
@click.option("--rho", default=0.0, show_default=True, type=float)
@click.option("--group", "group_name", default="su2", show_default=True)
@click.option("--size", default=16, show_default=True, type=int)
@click.option("--trials", default=20, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", default="gradcheck_report.json",
              show_default=True, type=click.Path())
@click.option("--quiet", is_flag=True, default=False)
def gradcheck(k, rho, group_name, size, trials, seed, out_path, quiet):
    """Directional-derivative consistency of the exact discrete gradient."""
    try:
        group = StructureGroup.parse(group_name)
    except ValueError as exc:
        click.echo(f"argument error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    grid = TorusGrid((size,) * 2, (2 * math.pi,) * 2)
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(trials):
        gamma = random_connection(grid, group, 2, 0.3, rng)
        direction = random_connection(grid, group, 3, 1.0, rng)
        _, _, rel = directional_derivative_check(
            gamma, direction, k, rho if rho > 0 else None)
        errors.append(rel)
    worst = max(errors)
    ok = worst <= 1e-6
    report = {"k": k, "rho": rho, "group": group.name, "size": size,
              "trials": trials, "seed": seed, "max_rel_error": worst,
              "rel_errors": errors, "tol": 1e-6, "pass": ok}
    try:
        _write_json(out_path, report)
    except OSError as exc:
        click.echo(f"i/o failure: {exc}", err=True)
        sys.exit(EXIT_IO)
    _say(quiet, f"gradcheck k={k}: max rel error {worst:.3e} "
                f"{'PASS' if ok else 'FAIL'} -> {out_path}")
    sys.exit(0 if ok else EXIT_CHECK_FAILED)


@main.command()
@click.option("--trials", default=20, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--size", default=32, show_default=True, type=int)
@click.option("--out", "out_path", default="gaugecheck_report.json",
              show_default=True, type=click.Path())
@click.option("--quiet", is_flag=True, default=False)
def gaugecheck(trials, seed, size, out_path, quiet):
    """Energy invariance and the curvature conjugation law under random
    band-limited gauge transformations."""
    grid = TorusGrid((size,) * 2, (2 * math.pi,) * 2)
    rng = np.random.default_rng(seed)
    drift = {"ym": 0.0, "ymk1": 0.0, "ymk2": 0.0, "bym": 0.0}
    conj_worst = 0.0
    for trial in range(trials):
        group = (StructureGroup.u1(), StructureGroup.su2())[trial % 2]
        gamma = random_connection(grid, group, 2, 0.4, rng)
        sigma = random_gauge(grid, group, rng, kind="winding", band=1)
        moved = act_on_connection(sigma, gamma)
        pairs = (("ym", lambda g: ym_energy(g)),
                 ("ymk1", lambda g: ymk_energy(g, 1)),
                 ("ymk2", lambda g: ymk_energy(g, 2)),
                 ("bym", lambda g: bym_energy(g)))
        for name, fn in pairs:
            e0, e1 = fn(gamma), fn(moved)
            drift[name] = max(drift[name], abs(e1 - e0) / (abs(e0) + 1e-300))
        F0, F1 = curvature(gamma), curvature(moved)
        conj = act_on_form(sigma, F0)
        conj_worst = max(conj_worst,
                         float(np.abs(F1.data - conj.data).max())
                         / (1.0 + frobenius_sup(F0)))
    ok = all(v <= 1e-8 for v in drift.values()) and conj_worst <= 1e-10
    report = {"trials": trials, "seed": seed, "size": size,
              "max_rel_energy_drift": drift,
              "max_conjugation_residual": conj_worst,
              "tol_energy": 1e-8, "tol_conjugation": 1e-10, "pass": ok}
    try:
        _write_json(out_path, report)
    except OSError as exc:
        click.echo(f"i/o failure: {exc}", err=True)
        sys.exit(EXIT_IO)
    _say(quiet, f"gaugecheck: drift={max(drift.values()):.3e} "
                f"conj={conj_worst:.3e} {'PASS' if ok else 'FAIL'} "
                f"-> {out_path}")
    sys.exit(0 if ok else EXIT_CHECK_FAILED)


@main.command()
@click.option("--snapshot", "snap_path", required=True, type=click.Path())
@click.option("--lam", default=None, type=float,
              help="Dyadic zoom factor (1, 1/2, 1/4, ...).")
@click.option("--center", default=None,
              help="Comma-separated coordinates; default: curvature peak.")
@click.option("--normalize", is_flag=True, default=False,
              help="Set the scale from the curvature peak instead of --lam.")
@click.option("--out", "out_base", required=True, type=click.Path())
@click.option("--quiet", is_flag=True, default=False)
def rescale(snap_path, lam, center, normalize, out_base, quiet):
    """Zoom a stored snapshot about a center and store the result."""
    if normalize == (lam is not None):
        click.echo("argument error: give exactly one of --lam or "
                   "--normalize", err=True)
        sys.exit(EXIT_CONFIG)
    if not normalize:
        j = -math.log2(lam) if lam > 0 else -1.0
        if lam <= 0 or lam > 1 or abs(j - round(j)) > 1e-12:
            click.echo("argument error: --lam must be a dyadic factor in "
                       "(0, 1]", err=True)
            sys.exit(EXIT_CONFIG)
    try:
        gamma, header = read_snapshot(snap_path)
    except OSError as exc:
        click.echo(f"cannot read snapshot: {exc}", err=True)
        sys.exit(EXIT_IO)
    except (KeyError, ValueError) as exc:
        click.echo(f"malformed snapshot: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    k = int(header.get("k", 0))
    ctr = None
    if center is not None:
        try:
            ctr = tuple(float(v) for v in center.split(","))
        except ValueError:
            click.echo("argument error: --center must be comma-separated "
                       "numbers", err=True)
            sys.exit(EXIT_CONFIG)
        if len(ctr) != gamma.grid.dim:
            click.echo("argument error: --center needs one coordinate per "
                       "axis", err=True)
            sys.exit(EXIT_CONFIG)
    try:
        if normalize:
            zoomed, info = normalized_zoom(gamma, k, ctr)
        else:
            if ctr is None:
                F = curvature(gamma)
                mag = np.sqrt(np.maximum(inner_product(F, F), 0.0))
                idx = np.unravel_index(int(np.argmax(mag)), mag.shape)
                ctr = tuple(gamma.grid.axis_points(a)[idx[a]]
                            for a in range(gamma.grid.dim))
            zoomed = rescale_snapshot(gamma, ctr, lam)
            info = {"center": ctr, "lam": lam, "mu": lam, "k": k}
        Fz = curvature(zoomed)
        magz = np.sqrt(np.maximum(inner_product(Fz, Fz), 0.0))
        info["peak_after"] = float(magz.max())
        write_snapshot(out_base, zoomed, float(header.get("t", 0.0)), k,
                       {"zoom": {kk: (list(v) if isinstance(v, tuple) else v)
                                 for kk, v in info.items()}})
        _write_json(out_base + ".zoom.json",
                    {kk: (list(v) if isinstance(v, tuple) else v)
                     for kk, v in info.items()})
    except OSError as exc:
        click.echo(f"i/o failure: {exc}", err=True)
        sys.exit(EXIT_IO)
    _say(quiet, f"rescale: wrote {out_base}.json/.bin "
                f"(peak after zoom {info['peak_after']:.6g})")
    sys.exit(0)


if __name__ == "__main__":
    main()
