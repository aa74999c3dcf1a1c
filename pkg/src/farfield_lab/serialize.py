"""JSON / CSV readers and writers for media, fields and reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .medium import (
    GridBox,
    RefractiveIndexField,
    builtin_media,
    bump_medium,
    constant_medium,
    disc_medium,
)


def parse_complex(v) -> complex:
    """Accept a number, ``[re, im]`` pair, ``{"re":..,"im":..}`` or a Python complex string."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"complex pair must have two entries, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, dict):
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    return complex(v)


def complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def grid_from_dict(box: dict) -> GridBox:
    return GridBox(
        center=tuple(np.broadcast_to(box.get("center", [0.0, 0.0]), 2)),
        half_width=tuple(np.broadcast_to(box.get("half_width", 1.5), 2)),
        resolution=tuple(np.broadcast_to(box.get("resolution", 96), 2)),
    )


def medium_from_dict(desc: dict) -> RefractiveIndexField:
    """Build a medium from its JSON description.

    ``kind`` is one of ``disc``, ``bump``, ``free``, ``builtin`` (with
    ``params.name``) or ``cells`` (explicit row-major ``values`` as ``[re, im]``).
    """
    d = int(desc.get("d", 2))
    if d != 2:
        raise ValueError("only d = 2 media are supported")
    kind = desc.get("kind", "cells")
    params = desc.get("params", {}) or {}
    if kind == "builtin":
        res = int(np.broadcast_to(desc.get("box", {}).get("resolution", 96), 2)[0])
        media = builtin_media(res)
        name = params.get("name", "disc")
        if name not in media:
            raise ValueError(f"unknown builtin medium {name!r}; choose from {sorted(media)}")
        return media[name]
    grid = grid_from_dict(desc.get("box", {}))
    if kind == "disc":
        return disc_medium(
            tuple(params.get("center", [0.0, 0.0])), float(params.get("R", 1.0)), parse_complex(params.get("n0", 1.5)), grid
        )
    if kind == "bump":
        return bump_medium(
            tuple(params.get("center", [0.0, 0.0])),
            float(params.get("R", 1.0)),
            parse_complex(params.get("amplitude", 1.0)),
            grid,
        )
    if kind == "free":
        return constant_medium(grid)
    if kind == "cells":
        vals = np.asarray(desc["values"], dtype=float)
        if vals.ndim != 2 or vals.shape[1] != 2:
            raise ValueError("cell values must be a list of [re, im] pairs")
        return RefractiveIndexField(grid, vals[:, 0] + 1j * vals[:, 1])
    raise ValueError(f"unknown medium kind {kind!r}")


def medium_to_dict(m: RefractiveIndexField) -> dict:
    return {
        "d": 2,
        "box": m.grid.to_dict(),
        "kind": "cells",
        "values": [complex_pair(v) for v in m.values.ravel()],
    }


def load_medium(source) -> RefractiveIndexField:
    if isinstance(source, dict):
        return medium_from_dict(source)
    with open(source, encoding="utf-8") as fh:
        return medium_from_dict(json.load(fh))


def write_field_csv(path, grid: GridBox, values: np.ndarray) -> None:
    """Columns ``ix, iy, x, y, re, im``; rows ordered with ``ix`` slowest."""
    X, Y = grid.mesh()
    vals = np.asarray(values).reshape(grid.shape)
    nx, ny = grid.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ix", "iy", "x", "y", "re", "im"])
        for i in range(nx):
            for j in range(ny):
                v = vals[i, j]
                w.writerow([i, j, repr(float(X[i, j])), repr(float(Y[i, j])), repr(float(v.real)), repr(float(v.imag))])


def read_field_csv(path, grid: GridBox) -> np.ndarray:
    out = np.zeros(grid.shape, dtype=complex)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[int(row["ix"]), int(row["iy"])] = float(row["re"]) + 1j * float(row["im"])
    return out


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return complex_pair(complex(x))
    return x
