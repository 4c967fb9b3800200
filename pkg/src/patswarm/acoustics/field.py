"""Far-field piston model and linear superposition over boards."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import j1

from ..errors import GeometryError, NearFieldError
from .array import REFERENCE_DISTANCE, DriveState, Medium, PhasedArrayModel, TransducerElement, as_vec3

NEAR_FIELD_GUARD = 1e-6


def directivity(x):
    """Circular piston directivity 2 J1(x) / x, equal to 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 8.0, 2.0 * j1(safe) / safe)


def _response(positions, normals, radius, p0, points, k):
    # (P, N) complex pressure per unit drive
    diff = points[:, None, :] - positions[None, :, :]
    d = np.sqrt(np.einsum("pnk,pnk->pn", diff, diff))
    if np.any(d < NEAR_FIELD_GUARD):
        raise NearFieldError(f"query point within {NEAR_FIELD_GUARD} m of a transducer centre")
    cross = np.cross(normals[None, :, :], diff)
    sin_theta = np.sqrt(np.einsum("pnk,pnk->pn", cross, cross)) / d
    D = directivity(k * radius * sin_theta)
    return p0 * (REFERENCE_DISTANCE / d) * D * np.exp(1j * k * d)


def element_response(array: PhasedArrayModel, points, medium: Medium) -> np.ndarray:
    """Transfer matrix H with H[p, j] = pressure at point p from element j at unit drive."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return _response(array.positions, array.normals, array.radius, array.p0, pts, medium.wavenumber)


def piston_pressure(
    element: TransducerElement, phase: float, amplitude: float, point, medium: Medium
) -> complex:
    pos = np.asarray(element.position, dtype=float)[None, :]
    nrm = np.asarray(element.normal, dtype=float)[None, :]
    h = _response(pos, nrm, element.radius, element.p0, as_vec3(point)[None, :], medium.wavenumber)
    return complex(h[0, 0] * amplitude * np.exp(1j * phase))


def _check_pairs(arrays):
    for array, drive in arrays:
        if len(drive) != len(array):
            raise GeometryError(
                f"drive has {len(drive)} entries for an array of {len(array)} elements"
            )


def field_at_points(arrays, points, medium: Medium) -> np.ndarray:
    """Complex pressure at each of ``points`` (P, 3) from every (array, drive) pair."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    _check_pairs(arrays)
    total = np.zeros(pts.shape[0], dtype=complex)
    for array, drive in arrays:
        total += element_response(array, pts, medium) @ drive.complex()
    return total


def field_at(arrays, point, medium: Medium) -> complex:
    return complex(field_at_points(arrays, as_vec3(point)[None, :], medium)[0])


@dataclass(frozen=True)
class GridSpec:
    """Planar lattice: point (i, j) = origin + j*res*u + i*res*v, i over rows (v), j over columns (u)."""

    origin: tuple
    u_axis: tuple
    v_axis: tuple
    resolution: float
    n_u: int
    n_v: int

    def __post_init__(self):
        u, v = as_vec3(self.u_axis), as_vec3(self.v_axis)
        if abs(np.linalg.norm(u) - 1) > 1e-9 or abs(np.linalg.norm(v) - 1) > 1e-9 or abs(u @ v) > 1e-9:
            raise GeometryError("grid axes must be orthonormal")
        if not self.resolution > 0:
            raise GeometryError("grid resolution must be positive")
        if self.n_u < 1 or self.n_v < 1:
            raise GeometryError("grid has zero area (no lattice points)")

    @classmethod
    def centered(cls, center, u_axis, v_axis, width, height, resolution):
        """Lattice covering width x height around ``center``; counts rounded to include both edges."""
        if width < 0 or height < 0:
            raise GeometryError("grid extents must be non-negative")
        n_u = int(round(width / resolution)) + 1
        n_v = int(round(height / resolution)) + 1
        c, u, v = as_vec3(center), as_vec3(u_axis), as_vec3(v_axis)
        origin = c - u * (n_u - 1) * resolution / 2 - v * (n_v - 1) * resolution / 2
        return cls(tuple(origin), tuple(u), tuple(v), resolution, n_u, n_v)

    def row_points(self, i: int) -> np.ndarray:
        o, u, v = as_vec3(self.origin), as_vec3(self.u_axis), as_vec3(self.v_axis)
        j = np.arange(self.n_u)[:, None]
        return o + v * (i * self.resolution) + u * (j * self.resolution)

    def points(self) -> np.ndarray:
        return np.stack([self.row_points(i) for i in range(self.n_v)])


@dataclass
class FieldGrid:
    spec: GridSpec
    samples: np.ndarray  # (n_v, n_u) complex, row-major

    @property
    def origin(self):
        return as_vec3(self.spec.origin)

    @property
    def axes(self):
        return as_vec3(self.spec.u_axis), as_vec3(self.spec.v_axis)

    @property
    def resolution(self):
        return self.spec.resolution

    def points(self) -> np.ndarray:
        return self.spec.points()

    def argmax_point(self) -> np.ndarray:
        i, j = np.unravel_index(np.argmax(np.abs(self.samples)), self.samples.shape)
        return self.spec.row_points(i)[j]


def sample_grid(arrays, grid: GridSpec, medium: Medium, workers: int = 1) -> FieldGrid:
    """Evaluate the field row by row; each row is computed identically regardless of ``workers``."""
    _check_pairs(arrays)

    def row(i):
        return field_at_points(arrays, grid.row_points(i), medium)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(grid.n_v)))
    else:
        rows = [row(i) for i in range(grid.n_v)]
    return FieldGrid(grid, np.array(rows, dtype=complex).reshape(grid.n_v, grid.n_u))


@dataclass
class LineProfile:
    start: np.ndarray
    end: np.ndarray
    samples: np.ndarray  # |p| in Pa

    def __post_init__(self):
        self.start = as_vec3(self.start)
        self.end = as_vec3(self.end)
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size < 3:
            raise GeometryError("a line profile needs at least 3 samples")
        if not self.spacing > 0:
            raise GeometryError("line profile spacing must be positive")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    @property
    def spacing(self) -> float:
        return self.length / (self.samples.size - 1)

    def positions(self) -> np.ndarray:
        """Arc-length coordinate (m) of each sample from ``start``."""
        return np.arange(self.samples.size) * self.spacing

    def points(self) -> np.ndarray:
        s = np.linspace(0.0, 1.0, self.samples.size)[:, None]
        return self.start + s * (self.end - self.start)


def line_profile(arrays, start, end, n: int, medium: Medium) -> LineProfile:
    start, end = as_vec3(start), as_vec3(end)
    s = np.linspace(0.0, 1.0, n)[:, None]
    pts = start + s * (end - start)
    return LineProfile(start, end, np.abs(field_at_points(arrays, pts, medium)))
