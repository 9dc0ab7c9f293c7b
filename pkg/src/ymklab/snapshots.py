"""Connection snapshots: a JSON sidecar plus a raw little-endian payload.

A snapshot is a pair of files sharing a base path: `<base>.json` holds the
grid, group, flow time, and layout metadata; `<base>.bin` holds the
connection components as float64 pairs.  The payload index order is

    [axis slot][fiber row][fiber col][grid point, C order][re, im]

so the byte count is dim * m * m * prod(sizes) * 2 * 8.  Writing and
reading the same state round-trips bit-exactly: resumed runs continue the
float sequence of an uninterrupted one.
"""

import json
import os

import numpy as np

from .algebra import FormField, StructureGroup
from .grid import TorusGrid

LAYOUT = "axis-major, component-major, grid C order, interleaved re/im float64"
FORMAT_VERSION = 1


def _base(path):
    root, ext = os.path.splitext(path)
    return root if ext in (".json", ".bin") else path


def write_snapshot(path, gamma, t, k, extra=None):
    """Write `<base>.json` and `<base>.bin` for a degree-1 connection field.
    Returns the base path.  `extra` entries (seed, step index, ...) are
    merged into the sidecar under their own keys."""
    if gamma.degree != 1 or gamma.nderiv != 0:
        raise ValueError("snapshots hold plain connections (degree 1)")
    base = _base(path)
    grid, group = gamma.grid, gamma.group
    n, m = grid.dim, group.m
    arr = np.moveaxis(gamma.data, (-2, -1), (1, 2))
    flat = np.stack([arr.real, arr.imag], axis=-1)
    payload = np.ascontiguousarray(flat, dtype="<f8").tobytes()
    header = {
        "format_version": FORMAT_VERSION,
        "grid": {
            "sizes": list(grid.sizes),
            "lengths": list(grid.lengths),
            "band_limit": list(grid.band_limit),
        },
        "group": group.name,
        "t": float(t),
        "k": int(k),
        "endianness": "little",
        "layout": LAYOUT,
        "payload": os.path.basename(base) + ".bin",
        "payload_bytes": len(payload),
    }
    if extra:
        header.update(extra)
    expected = n * m * m * int(np.prod(grid.sizes)) * 2 * 8
    if len(payload) != expected:
        raise IOError(f"payload size mismatch: {len(payload)} != {expected}")
    with open(base + ".bin", "wb") as fh:
        fh.write(payload)
    with open(base + ".json", "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return base


def read_snapshot(path):
    """Read a snapshot written by write_snapshot.  Returns (gamma, header).
    The header dict is the sidecar contents; gamma is the reconstructed
    degree-1 field on a freshly built grid."""
    base = _base(path)
    with open(base + ".json") as fh:
        header = json.load(fh)
    grid = TorusGrid(tuple(header["grid"]["sizes"]),
                     tuple(header["grid"]["lengths"]),
                     tuple(header["grid"]["band_limit"]))
    group = StructureGroup.parse(header["group"])
    n, m = grid.dim, group.m
    expected = n * m * m * int(np.prod(grid.sizes)) * 2 * 8
    payload_path = os.path.join(os.path.dirname(base) or ".",
                                header["payload"])
    with open(payload_path, "rb") as fh:
        payload = fh.read()
    if len(payload) != expected:
        raise IOError(f"payload size mismatch: {len(payload)} != {expected}")
    if header.get("payload_bytes") not in (None, len(payload)):
        raise IOError("sidecar payload_bytes disagrees with the .bin file")
    flat = np.frombuffer(payload, dtype="<f8").reshape(
        (n, m, m) + grid.sizes + (2,))
    vals = flat[..., 0] + 1j * flat[..., 1]
    data = np.moveaxis(vals, (1, 2), (-2, -1))
    gamma = FormField(grid, group, np.ascontiguousarray(data), degree=1)
    return gamma, header
