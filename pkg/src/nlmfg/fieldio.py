"""Text and image serialization of grid fields and residual histories."""

from __future__ import annotations

import csv
import io
import os

import numpy as np

from nlmfg.grid import Grid

HISTORY_COLUMNS = ("iter", "continuity_res", "a_fixedpoint_res", "complementarity_res", "objective", "iterate_change")


def write_field_csv(path: str | os.PathLike, field: np.ndarray, grid: Grid, meta: dict | None = None) -> None:
    """Write a cell field; rows are x1 indices, columns x2 indices.

    Header lines start with ``#`` and hold ``key=value`` pairs: the grid
    description followed by ``meta``. Values use 17 significant digits, so
    reading the file back reproduces the field exactly.
    """
    field = np.asarray(field, dtype=float)
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    lines = [f"# {k}={v}" for k, v in {**grid.to_dict(), **(meta or {})}.items()]
    body = io.StringIO()
    np.savetxt(body, field, fmt="%.17g", delimiter=",")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
        fh.write(body.getvalue())


def read_field_csv(path: str | os.PathLike) -> tuple[np.ndarray, dict]:
    """Inverse of :func:`write_field_csv`; header values are returned as strings."""
    meta = {}
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
    data = np.loadtxt(io.StringIO(text), delimiter=",", comments="#", ndmin=2)
    return data, meta


class HistoryWriter:
    """Append residual-history rows to a CSV file as they are produced."""

    def __init__(self, path: str | os.PathLike):
        self._fh = open(path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(HISTORY_COLUMNS)

    def __call__(self, row: dict) -> None:
        self._writer.writerow([row["iter"]] + [f"{row[c]:.17g}" for c in HISTORY_COLUMNS[1:]])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_history_csv(path: str | os.PathLike, history: list[dict]) -> None:
    with HistoryWriter(path) as w:
        for row in history:
            w(row)


def read_history_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [{k: (int(v) if k == "iter" else float(v)) for k, v in row.items()} for row in csv.DictReader(fh)]


def heatmap_pixels(field: np.ndarray) -> tuple[np.ndarray, float, float]:
    """8-bit min-max normalized image of a cell field and the ``(min, max)`` used.

    Image rows run from the largest x2 down to the smallest, columns along x1.
    A constant field maps to 128 everywhere.
    """
    field = np.asarray(field, dtype=float)
    if field.ndim != 2:
        raise ValueError(f"heatmap needs a 2D field, got shape {field.shape}")
    if not np.all(np.isfinite(field)):
        raise ValueError("heatmap field contains non-finite values")
    lo, hi = float(field.min()), float(field.max())
    image = field.T[::-1]
    if hi == lo:
        return np.full(image.shape, 128, dtype=np.uint8), lo, hi
    pixels = np.rint(255.0 * (image - lo) / (hi - lo))
    return pixels.astype(np.uint8), lo, hi


def emit_heatmap(field: np.ndarray, path: str | os.PathLike) -> dict:
    """Write a binary PGM (P5) heatmap; returns the normalization applied.

    Nothing is written when the field has non-finite entries.
    """
    pixels, lo, hi = heatmap_pixels(field)
    height, width = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(pixels).tobytes())
    return {"min": lo, "max": hi}


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Pixels of a P5 file written by :func:`emit_heatmap`."""
    with open(path, "rb") as fh:
        data = fh.read()
    header = data.split(b"\n", 3)
    if header[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM file")
    width, height = (int(v) for v in header[1].split())
    return np.frombuffer(header[3], dtype=np.uint8).reshape(height, width)
