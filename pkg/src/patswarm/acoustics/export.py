"""FieldGrid writers: CSV (x,y,z,re,im,abs) and 16-bit plain PGM heatmaps."""

from __future__ import annotations

import numpy as np

from .field import FieldGrid

CSV_HEADER = "x,y,z,re,im,abs"


def write_csv(grid: FieldGrid, path) -> None:
    pts = grid.points().reshape(-1, 3)
    s = grid.samples.reshape(-1)
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for (x, y, z), v in zip(pts, s):
            fh.write(",".join(repr(float(c)) for c in (x, y, z, v.real, v.imag, abs(v))) + "\n")


def read_csv(path) -> np.ndarray:
    """Rows of (x, y, z, re, im, abs)."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_pgm(grid: FieldGrid, path, maxval: int = 65535) -> None:
    mag = np.abs(grid.samples)
    peak = mag.max()
    levels = np.zeros(mag.shape, dtype=int) if peak <= 0 else np.rint(mag / peak * maxval).astype(int)
    n_v, n_u = levels.shape
    with open(path, "w", newline="\n") as fh:
        fh.write(f"P2\n{n_u} {n_v}\n{maxval}\n")
        for row in levels:
            fh.write(" ".join(str(v) for v in row) + "\n")


def read_pgm(path) -> np.ndarray:
    tokens = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0]
            tokens.extend(line.split())
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    w, h, _ = int(tokens[1]), int(tokens[2]), int(tokens[3])
    return np.array(tokens[4:], dtype=int).reshape(h, w)
