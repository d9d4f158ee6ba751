"""Snapshots, CSV series and run manifests.

Snapshot layout (little-endian throughout)::

    magic  8 bytes   b"LSPSNAP1" (1D) or b"LSPSNAP2" (two particles)
    1D:    int64 n, float64 extent, mass, hbar, time
    2P:    int64 n, n', float64 extent, extent', mass, mass', hbar, lambda, time
    payload: complex values as interleaved float64 (re, im), row-major
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .grid import Grid1D, SuperDensity

MAGIC_1D = b"LSPSNAP1"
MAGIC_2P = b"LSPSNAP2"
_HEAD_1D = struct.Struct("<q4d")
_HEAD_2P = struct.Struct("<2q7d")


def format_float(v) -> str:
    """Round-trip representation with 17 significant digits."""
    return f"{float(v):.17g}"


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else format_float(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text().splitlines()
    cols = text[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]], dtype=float)
    return cols, data.reshape(-1, len(cols))


def _payload(values) -> bytes:
    v = np.ascontiguousarray(values, dtype="<c16")
    return v.view("<f8").tobytes()


def write_snapshot(path, state: SuperDensity) -> Path:
    g = state.grid
    path = Path(path)
    path.write_bytes(MAGIC_1D + _HEAD_1D.pack(g.n, g.extent, g.mass, g.hbar, state.time) + _payload(state.values))
    return path


def write_hybrid_snapshot(path, state, lam: float, mass: float, mass_q: float) -> Path:
    g1, g2 = state.grid1, state.grid2
    head = _HEAD_2P.pack(g1.n, g2.n, g1.extent, g2.extent, mass, mass_q, g1.hbar, lam, state.time)
    path = Path(path)
    path.write_bytes(MAGIC_2P + head + _payload(state.values))
    return path


def read_snapshot(path):
    """Returns ``(header dict, values)``; ``values`` has 2 or 4 axes."""
    raw = Path(path).read_bytes()
    magic, body = raw[:8], raw[8:]
    if magic == MAGIC_1D:
        n, extent, mass, hbar, time = _HEAD_1D.unpack_from(body)
        head = dict(n=n, extent=extent, mass=mass, hbar=hbar, time=time)
        shape, off = (n, n), _HEAD_1D.size
    elif magic == MAGIC_2P:
        n, n2, e1, e2, m1, m2, hbar, lam, time = _HEAD_2P.unpack_from(body)
        head = dict(n=n, n_q=n2, extent=e1, extent_q=e2, mass=m1, mass_q=m2, hbar=hbar, lam=lam, time=time)
        shape, off = (n, n, n2, n2), _HEAD_2P.size
    else:
        raise ValueError(f"{path}: not a snapshot file")
    vals = np.frombuffer(body[off:], dtype="<f8").view("<c16").reshape(shape).astype(complex)
    return head, vals


def load_superdensity(path) -> SuperDensity:
    head, vals = read_snapshot(path)
    if vals.ndim != 2:
        raise ValueError("two-particle snapshot; use read_snapshot")
    return SuperDensity(Grid1D(head["n"], head["extent"], head["mass"], head["hbar"]), vals, head["time"])


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"
