"""Field file format: one JSON header line, then little-endian float64 values.

Header keys: ``type`` (scalar | vector2 | symmat2 | affine_vector2), ``n``,
``entries``; affine fields add ``matrix`` (2x2, row-major) and ``offset``.
Entries are stored one after another, each as a row-major n*n block.
Extension: ``.fld``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .fields import (
    AffineVectorField,
    FieldLike,
    Grid2,
    ScalarField,
    SymMatField2,
    VectorField2,
)

_TYPE_NAMES = {
    ScalarField: "scalar",
    VectorField2: "vector2",
    SymMatField2: "symmat2",
    AffineVectorField: "affine_vector2",
}


def _blocks(f: FieldLike) -> list[np.ndarray]:
    if isinstance(f, ScalarField):
        return [f.values]
    if isinstance(f, VectorField2):
        return [f.c1.values, f.c2.values]
    if isinstance(f, SymMatField2):
        return [f.e11.values, f.e12.values, f.e22.values]
    if isinstance(f, AffineVectorField):
        return [f.periodic.c1.values, f.periodic.c2.values]
    raise ParameterError(f"cannot serialize {type(f).__name__}")


def write_field(path: str | Path, f: FieldLike) -> None:
    header = {
        "type": _TYPE_NAMES[type(f)],
        "n": f.grid.n,
        "entries": len(_blocks(f)),
    }
    if isinstance(f, AffineVectorField):
        header["matrix"] = [list(map(float, row)) for row in f.matrix]
        header["offset"] = [float(x) for x in f.offset]
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii"))
        fh.write(b"\n")
        for block in _blocks(f):
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def read_field(path: str | Path, max_active_freq: int | None = None) -> FieldLike:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        n = int(header["n"])
        entries = int(header["entries"])
        raw = fh.read()
    expected = entries * n * n * 8
    if len(raw) != expected:
        raise ParameterError(
            f"{path}: expected {expected} payload bytes for {entries} entries "
            f"at n={n}, found {len(raw)}"
        )
    grid = Grid2(n, max_active_freq)
    data = np.frombuffer(raw, dtype="<f8").reshape(entries, n, n)
    fields = [ScalarField.from_values(grid, block) for block in data]
    kind = header["type"]
    if kind == "scalar":
        return fields[0]
    if kind == "vector2":
        return VectorField2(*fields)
    if kind == "symmat2":
        return SymMatField2(*fields)
    if kind == "affine_vector2":
        return AffineVectorField(
            np.array(header["matrix"], dtype=float),
            np.array(header["offset"], dtype=float),
            VectorField2(*fields),
        )
    raise ParameterError(f"{path}: unknown field type {kind!r}")
