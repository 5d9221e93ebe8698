"""Field files and deterministic JSON reports.

A field file is one JSON header line followed by CSV rows, one row per node
in row-major (i, j) order.  Complex entries are written as ``re,im`` pairs
and su(2) entries as the 4 complex matrix entries in row-major order.
Floats are written with ``repr`` so a round trip is bit-exact.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

from .surface import LatticeConnection, TorusGrid

KINDS = ("scalar", "complex", "lie")


def _fmt(x: float) -> str:
    return repr(float(x))


def field_to_text(grid: TorusGrid, values: np.ndarray, kind: str, group: str = "", degree: int = 0,
                  extra: Dict[str, Any] | None = None) -> str:
    if kind not in KINDS:
        raise ValueError(f"unknown field kind {kind!r}")
    values = np.asarray(values)
    per_node = values.reshape(grid.nx * grid.ny, -1)
    header = {"nx": grid.nx, "ny": grid.ny, "lx": grid.lx, "ly": grid.ly, "kind": kind,
              "group": group, "degree": int(degree), "components": int(per_node.shape[1])}
    if extra:
        header.update(extra)
    lines = [json.dumps(header, sort_keys=True)]
    for row in per_node:
        if kind == "scalar":
            lines.append(",".join(_fmt(v) for v in np.real(row)))
        else:
            lines.append(",".join(f"{_fmt(v.real)},{_fmt(v.imag)}" for v in row.astype(complex)))
    return "\n".join(lines) + "\n"


def text_to_field(text: str) -> Tuple[Dict[str, Any], TorusGrid, np.ndarray]:
    lines = text.strip("\n").split("\n")
    header = json.loads(lines[0])
    for key in ("nx", "ny", "lx", "ly", "kind"):
        if key not in header:
            raise ValueError(f"field header missing {key!r}")
    grid = TorusGrid(int(header["nx"]), int(header["ny"]), float(header["lx"]), float(header["ly"]))
    rows = lines[1:]
    if len(rows) != grid.nx * grid.ny:
        raise ValueError(f"expected {grid.nx * grid.ny} rows, found {len(rows)}")
    data = np.array([[float(t) for t in r.split(",")] for r in rows])
    kind = header["kind"]
    if kind == "scalar":
        vals = data
    else:
        vals = data[:, 0::2] + 1j * data[:, 1::2]
    ncomp = vals.shape[1]
    if kind == "lie" and header.get("group") == "su2":
        vals = vals.reshape(grid.nx, grid.ny, ncomp // 4, 2, 2)
        if ncomp == 4:
            vals = vals[:, :, 0]
    else:
        vals = vals.reshape(grid.nx, grid.ny, ncomp)
        if ncomp == 1:
            vals = vals[:, :, 0]
    return header, grid, vals


def write_field(path, grid: TorusGrid, values: np.ndarray, kind: str, group: str = "", degree: int = 0,
                extra: Dict[str, Any] | None = None) -> None:
    Path(path).write_text(field_to_text(grid, values, kind, group, degree, extra))


def read_field(path) -> Tuple[Dict[str, Any], TorusGrid, np.ndarray]:
    return text_to_field(Path(path).read_text())


def write_connection(path, A: LatticeConnection) -> None:
    """Connections are lie fields whose two components are A_s and A_t."""
    if A.group == "su2":
        vals = np.stack([A.As, A.At], axis=2)
    else:
        vals = np.stack([A.As, A.At], axis=-1)
    write_field(path, A.grid, vals, "lie", A.group, A.degree, {"form": "connection"})


def read_connection(path) -> LatticeConnection:
    header, grid, vals = read_field(path)
    group = header.get("group") or "u1"
    if group == "su2":
        if vals.ndim != 5 or vals.shape[2] != 2:
            raise ValueError("su2 connection file must hold two matrix components per node")
        return LatticeConnection(grid, group, vals[:, :, 0], vals[:, :, 1], 0)
    if vals.ndim != 3 or vals.shape[2] != 2:
        raise ValueError("u1 connection file must hold two components per node")
    return LatticeConnection(grid, group, vals[..., 0], vals[..., 1], int(header.get("degree", 0)))


# ---------------------------------------------------------------------------
# JSON reports
# ---------------------------------------------------------------------------


def _normalize(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}" if obj.denominator != 1 else str(obj.numerator)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Float(float(obj))
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_normalize(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"re": _Float(obj.real), "im": _Float(obj.imag)}
    return obj


class _Float(float):
    pass


def _encode(obj: Any) -> str:
    if isinstance(obj, _Float):
        if math.isnan(obj) or math.isinf(obj):
            return json.dumps(str(float(obj)))
        s = "%.17g" % obj
        return s if any(c in s for c in ".en") else s + ".0"
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, list):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    return json.dumps(obj)


def dumps_report(results: Dict[str, Any]) -> str:
    """Deterministic JSON: sorted keys, '%.17g' floats, rationals as 'p/q'."""
    return _encode(_normalize(results)) + "\n"


def emit_report(results: Dict[str, Any], path=None) -> str:
    text = dumps_report(results)
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------------------
# product fields
# ---------------------------------------------------------------------------


def _grid_header(grid: TorusGrid) -> Dict[str, Any]:
    return {"nx": grid.nx, "ny": grid.ny, "lx": grid.lx, "ly": grid.ly}


def product_field_to_text(sigma: TorusGrid, fiber: TorusGrid, values: np.ndarray) -> str:
    """Paired headers; then one CSV row per Sigma node holding the fibre values."""
    values = np.asarray(values, dtype=float).reshape(sigma.nx * sigma.ny, fiber.nx * fiber.ny)
    header = {"kind": "scalar", "layout": "product", "sigma": _grid_header(sigma), "fiber": _grid_header(fiber)}
    lines = [json.dumps(header, sort_keys=True)]
    lines.extend(",".join(_fmt(v) for v in row) for row in values)
    return "\n".join(lines) + "\n"


def text_to_product_field(text: str) -> Tuple[TorusGrid, TorusGrid, np.ndarray]:
    lines = text.strip("\n").split("\n")
    header = json.loads(lines[0])
    if header.get("layout") != "product":
        raise ValueError("not a product field file")
    grids = []
    for key in ("sigma", "fiber"):
        h = header[key]
        grids.append(TorusGrid(int(h["nx"]), int(h["ny"]), float(h["lx"]), float(h["ly"])))
    sigma, fiber = grids
    rows = lines[1:]
    if len(rows) != sigma.nx * sigma.ny:
        raise ValueError(f"expected {sigma.nx * sigma.ny} rows, found {len(rows)}")
    data = np.array([[float(t) for t in r.split(",")] for r in rows])
    if data.shape[1] != fiber.nx * fiber.ny:
        raise ValueError("row length does not match the fibre grid")
    return sigma, fiber, data.reshape(sigma.shape + fiber.shape)


def write_product_field(path, sigma: TorusGrid, fiber: TorusGrid, values: np.ndarray) -> None:
    Path(path).write_text(product_field_to_text(sigma, fiber, values))


def read_product_field(path) -> Tuple[TorusGrid, TorusGrid, np.ndarray]:
    return text_to_product_field(Path(path).read_text())
