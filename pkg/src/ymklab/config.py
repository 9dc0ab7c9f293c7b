"""JSON run configuration: schema validation and object construction.

A config file has four sections; `flow` and `monitor` are optional and
filled from defaults.  Unknown keys anywhere are rejected so typos fail
loudly instead of silently running defaults.

    {
      "grid":    {"sizes": [32, 32], "lengths": [6.2832, 6.2832],
                  "band_limit": [10, 10]},          # band_limit optional
      "group":   "su2",                             # u1 | su2 | u<m>
      "init":    {"kind": "random_band_limited",
                  "band": 2, "amplitude": 0.1, "seed": 0},
      "flow":    {"k": 0, "rho": 0.0, "integrator": "euler",
                  "dt": null, "cfl_safety": null, "t_max": 0.01},
      "monitor": {"sample_interval": 10, "snapshot_interval": 0,
                  "ball_radius": 0.125, "scan_stride": 4, "q_max": 2,
                  "sup_ceiling": 1e6}
    }

Init kinds: random_band_limited (band, amplitude, seed), abelian_mode
(mode, component, amplitude, phase, direction), lump (amplitude, width,
center).  Schema violations raise ConfigError; the CLI maps that to exit
code 2 and file-system trouble to exit code 3.
"""

import json

from .algebra import StructureGroup
from .flow import (FlowConfig, INTEGRATORS, abelian_mode_initial,
                   lump_initial, random_initial)
from .grid import TorusGrid


class ConfigError(ValueError):
    """A config file violates the schema."""


FLOW_DEFAULTS = {"k": 0, "rho": 0.0, "integrator": "euler", "dt": None,
                 "cfl_safety": None, "t_max": 0.01}
MONITOR_DEFAULTS = {"sample_interval": 10, "snapshot_interval": 0,
                    "ball_radius": 0.125, "scan_stride": 4, "q_max": 2,
                    "sup_ceiling": 1e6}
INIT_KINDS = ("random_band_limited", "abelian_mode", "lump")


def _need(section, obj, key, types, where):
    if key not in obj:
        raise ConfigError(f"{where}: missing required key '{key}'")
    val = obj[key]
    if not isinstance(val, types):
        raise ConfigError(f"{where}.{key}: expected {types}, got "
                          f"{type(val).__name__}")
    return val


def _no_unknown(obj, allowed, where):
    extra = set(obj) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _int_list(val, where, length=None):
    if not isinstance(val, list) or not all(isinstance(v, int) for v in val):
        raise ConfigError(f"{where}: expected a list of integers")
    if length is not None and len(val) != length:
        raise ConfigError(f"{where}: expected {length} entries")
    return val


def _num_list(val, where, length=None):
    if not isinstance(val, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool)
            for v in val):
        raise ConfigError(f"{where}: expected a list of numbers")
    if length is not None and len(val) != length:
        raise ConfigError(f"{where}: expected {length} entries")
    return [float(v) for v in val]


def validate_config(obj):
    """Validate a parsed JSON object; returns a normalized config dict with
    all defaults filled in.  Raises ConfigError on any violation."""
    if not isinstance(obj, dict):
        raise ConfigError("top level: expected a JSON object")
    _no_unknown(obj, ("grid", "group", "init", "flow", "monitor"), "top level")

    gspec = _need("grid", obj, "grid", dict, "top level")
    _no_unknown(gspec, ("sizes", "lengths", "band_limit"), "grid")
    sizes = _int_list(_need("grid", gspec, "sizes", list, "grid"),
                      "grid.sizes")
    dim = len(sizes)
    if not 1 <= dim <= 4:
        raise ConfigError("grid.sizes: supported dimensions are 1 through 4")
    lengths = _num_list(_need("grid", gspec, "lengths", list, "grid"),
                        "grid.lengths", dim)
    if any(L <= 0 for L in lengths):
        raise ConfigError("grid.lengths: entries must be positive")
    band = gspec.get("band_limit")
    if band is not None:
        band = _int_list(band, "grid.band_limit", dim)
        for N, b in zip(sizes, band):
            if not 1 <= b <= N // 2:
                raise ConfigError("grid.band_limit: each entry must lie in "
                                  "[1, N/2]")

    group_name = _need("top", obj, "group", str, "top level")
    try:
        StructureGroup.parse(group_name)
    except ValueError as exc:
        raise ConfigError(f"group: {exc}") from None

    ispec = _need("init", obj, "init", dict, "top level")
    kind = _need("init", ispec, "kind", str, "init")
    if kind not in INIT_KINDS:
        raise ConfigError(f"init.kind: must be one of {INIT_KINDS}")
    if kind == "random_band_limited":
        _no_unknown(ispec, ("kind", "band", "amplitude", "seed"), "init")
        init = {
            "kind": kind,
            "band": _need("init", ispec, "band", int, "init"),
            "amplitude": float(_need("init", ispec, "amplitude",
                                     (int, float), "init")),
            "seed": ispec.get("seed", 0),
        }
        if init["band"] < 1:
            raise ConfigError("init.band: must be >= 1")
        if not isinstance(init["seed"], int):
            raise ConfigError("init.seed: must be an integer")
    elif kind == "abelian_mode":
        _no_unknown(ispec, ("kind", "mode", "component", "amplitude",
                            "phase", "direction", "seed"), "init")
        init = {
            "kind": kind,
            "mode": _int_list(_need("init", ispec, "mode", list, "init"),
                              "init.mode", dim),
            "component": _need("init", ispec, "component", int, "init"),
            "amplitude": float(_need("init", ispec, "amplitude",
                                     (int, float), "init")),
            "phase": float(ispec.get("phase", 0.0)),
            "direction": ispec.get("direction", 0),
            "seed": ispec.get("seed", 0),
        }
        if not 0 <= init["component"] < dim:
            raise ConfigError("init.component: must index a grid axis")
    else:
        _no_unknown(ispec, ("kind", "amplitude", "width", "center", "seed"),
                    "init")
        init = {
            "kind": kind,
            "amplitude": float(_need("init", ispec, "amplitude",
                                     (int, float), "init")),
            "width": float(_need("init", ispec, "width", (int, float),
                                 "init")),
            "center": (None if "center" not in ispec
                       else _num_list(ispec["center"], "init.center", dim)),
            "seed": ispec.get("seed", 0),
        }
        if init["width"] <= 0:
            raise ConfigError("init.width: must be positive")

    fspec = obj.get("flow", {})
    if not isinstance(fspec, dict):
        raise ConfigError("flow: expected an object")
    _no_unknown(fspec, tuple(FLOW_DEFAULTS), "flow")
    flow = {**FLOW_DEFAULTS, **fspec}
    if not isinstance(flow["k"], int) or flow["k"] < 0:
        raise ConfigError("flow.k: must be a non-negative integer")
    if flow["integrator"] not in INTEGRATORS:
        raise ConfigError(f"flow.integrator: must be one of {INTEGRATORS}")
    for key in ("rho", "t_max"):
        if not isinstance(flow[key], (int, float)) or isinstance(flow[key], bool):
            raise ConfigError(f"flow.{key}: must be a number")
    if flow["rho"] < 0:
        raise ConfigError("flow.rho: must be >= 0")
    if flow["t_max"] <= 0:
        raise ConfigError("flow.t_max: must be positive")
    if flow["dt"] is not None and (
            not isinstance(flow["dt"], (int, float)) or flow["dt"] <= 0):
        raise ConfigError("flow.dt: must be positive or null")
    if flow["cfl_safety"] is not None and not (
            isinstance(flow["cfl_safety"], (int, float))
            and 0 < flow["cfl_safety"] <= 1):
        raise ConfigError("flow.cfl_safety: must lie in (0, 1] or be null")

    mspec = obj.get("monitor", {})
    if not isinstance(mspec, dict):
        raise ConfigError("monitor: expected an object")
    _no_unknown(mspec, tuple(MONITOR_DEFAULTS), "monitor")
    monitor = {**MONITOR_DEFAULTS, **mspec}
    for key in ("sample_interval", "snapshot_interval", "scan_stride",
                "q_max"):
        if not isinstance(monitor[key], int) or monitor[key] < 0:
            raise ConfigError(f"monitor.{key}: must be a non-negative integer")
    if monitor["sample_interval"] < 1:
        raise ConfigError("monitor.sample_interval: must be >= 1")
    if monitor["scan_stride"] < 1:
        raise ConfigError("monitor.scan_stride: must be >= 1")
    for key in ("ball_radius", "sup_ceiling"):
        if not isinstance(monitor[key], (int, float)) or monitor[key] <= 0:
            raise ConfigError(f"monitor.{key}: must be positive")

    return {
        "grid": {"sizes": sizes, "lengths": lengths, "band_limit": band},
        "group": group_name,
        "init": init,
        "flow": flow,
        "monitor": monitor,
    }


def load_config(path):
    """Read and validate a JSON config file.  OSError propagates (the CLI
    maps it to exit 3); bad JSON or schema raises ConfigError (exit 2)."""
    with open(path) as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return validate_config(obj)


def build_grid(cfg):
    g = cfg["grid"]
    band = g["band_limit"]
    return TorusGrid(tuple(g["sizes"]), tuple(g["lengths"]),
                     None if band is None else tuple(band))


def build_group(cfg):
    return StructureGroup.parse(cfg["group"])


def build_initial(cfg, grid, group, seed_override=None):
    """Construct the initial connection named by the config; returns
    (gamma, seed_used)."""
    init = cfg["init"]
    seed = init["seed"] if seed_override is None else seed_override
    kind = init["kind"]
    if kind == "random_band_limited":
        band = min(init["band"], min(grid.band_limit))
        gamma = random_initial(grid, group, band, init["amplitude"], seed)
    elif kind == "abelian_mode":
        gamma = abelian_mode_initial(grid, group, init["mode"],
                                     init["component"], init["amplitude"],
                                     init["phase"], init["direction"])
    else:
        center = init["center"]
        gamma = lump_initial(grid, group, init["amplitude"], init["width"],
                             None if center is None else tuple(center),
                             seed)
    return gamma, seed


def build_flow_config(cfg, seed):
    f, mon = cfg["flow"], cfg["monitor"]
    return FlowConfig(
        k=f["k"], rho=float(f["rho"]), integrator=f["integrator"],
        dt=None if f["dt"] is None else float(f["dt"]),
        cfl_safety=(None if f["cfl_safety"] is None
                    else float(f["cfl_safety"])),
        t_max=float(f["t_max"]),
        sample_interval=mon["sample_interval"],
        snapshot_interval=mon["snapshot_interval"],
        ball_radius=float(mon["ball_radius"]),
        scan_stride=mon["scan_stride"],
        q_max=mon["q_max"],
        sup_ceiling=float(mon["sup_ceiling"]),
        seed=seed,
    )
