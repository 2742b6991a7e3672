"""Binary field/profile formats and plot-ready CSV/JSON output.

``.fld3``: 16-byte header (magic ``RFLD3``, NUL padded to 8 bytes, u32 version,
u32 reserved), then u32 ``n``, f64 ``L``, and ``n^3`` little-endian f64 values
in C order (x slowest).

``.prof``: same header layout with magic ``RPROF``; the reserved word holds the
direction (0 plus, 1 minus). Then u32 ``m``, f64 ``S_max``, u32 ``n_theta``,
u32 ``n_phi``, ``n_theta*n_phi`` rows of f64 ``(x, y, z, w)`` for the sphere
nodes, and ``m * n_theta * n_phi`` f64 values (s slowest).
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .grids import LineGrid, ScalarField3, UniformGrid3, sphere_quadrature
from .sobolev import RadiationProfile

VERSION = 1
_FLD = b"RFLD3\0\0\0"
_PRF = b"RPROF\0\0\0"
_DIRS = {"plus": 0, "minus": 1}


class FormatError(ValueError):
    pass


def _header(magic, reserved=0):
    return magic + struct.pack("<II", VERSION, reserved)


def _read_header(buf, magic):
    if len(buf) < 16 or buf[:8] != magic:
        raise FormatError("bad magic")
    version, reserved = struct.unpack("<II", buf[8:16])
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    return reserved


def write_fld3(path, f: ScalarField3) -> None:
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(_header(_FLD))
        fh.write(struct.pack("<Id", g.n, g.half_width))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_fld3(path) -> ScalarField3:
    buf = Path(path).read_bytes()
    _read_header(buf, _FLD)
    n, L = struct.unpack("<Id", buf[16:28])
    data = np.frombuffer(buf, dtype="<f8", offset=28)
    if data.size != n ** 3:
        raise FormatError("truncated field data")
    return ScalarField3(UniformGrid3(n, L), data.reshape(n, n, n).astype(float))


def write_prof(path, G: RadiationProfile) -> None:
    sph = G.sphere
    with open(path, "wb") as fh:
        fh.write(_header(_PRF, _DIRS[G.direction]))
        fh.write(struct.pack("<IdII", G.line.m, G.line.s_max, sph.n_theta, sph.n_phi))
        table = np.column_stack([sph.nodes, sph.weights])
        fh.write(np.ascontiguousarray(table, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(G.values, dtype="<f8").tobytes())


def read_prof(path) -> RadiationProfile:
    buf = Path(path).read_bytes()
    d = _read_header(buf, _PRF)
    if d not in (0, 1):
        raise FormatError("bad direction tag")
    m, smax, nt, nph = struct.unpack("<IdII", buf[16:36])
    N = nt * nph
    table = np.frombuffer(buf, dtype="<f8", offset=36, count=4 * N).reshape(N, 4)
    vals = np.frombuffer(buf, dtype="<f8", offset=36 + 32 * N)
    if vals.size != m * N:
        raise FormatError("truncated profile data")
    sph = sphere_quadrature(nt, nph)
    if not (np.allclose(table[:, :3], sph.nodes, atol=1e-12) and np.allclose(table[:, 3], sph.weights)):
        raise FormatError("node table does not match the product quadrature")
    direction = "plus" if d == 0 else "minus"
    return RadiationProfile(LineGrid(m, smax), sph, vals.reshape(m, N).astype(float), direction)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns: dict, comments: dict | None = None) -> None:
    """Columns of equal length; ``comments`` become leading ``# key: value`` lines."""
    keys = list(columns)
    n = {len(columns[k]) for k in keys}
    if len(n) > 1:
        raise ValueError("columns differ in length")
    with open(path, "w", newline="") as fh:
        for k, v in (comments or {}).items():
            fh.write(f"# {k}: {_fmt(v)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for row in zip(*(columns[k] for k in keys)):
            w.writerow([_fmt(x) for x in row])


def read_csv(path):
    comments, rows = {}, []
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            comments[k] = v
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    for row in reader:
        rows.append([float(x) if x not in ("true", "false") else x == "true" for x in row])
    cols = {h: np.array([r[i] for r in rows]) for i, h in enumerate(header)}
    return cols, comments


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    return x


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
