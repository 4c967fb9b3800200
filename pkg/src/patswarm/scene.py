"""Static acoustic scenes for the field and solve commands.

A scene document is JSON::

    {
      "medium": {"speed_of_sound": 343.0, "frequency": 40000.0},
      "boards": [{"name": "a", "position": [x, y, z], "yaw_deg": 0, "pitch_deg": 0, "drive": "on"}],
      "targets": [[x, y, z], ...],
      "method": "focus" | "gspat" | "wgs" | "levitation",
      "iterations": 50,
      "plane": "xy@0.05", "extent": 0.1, "resolution": 0.001
    }

Everything except ``boards`` is optional. Without targets every active board
radiates in phase at full amplitude; ``drive: "off"`` silences a board.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .acoustics import (
    DriveState,
    FieldGrid,
    GridSpec,
    Medium,
    Pose,
    default_board,
    field_at_points,
    focus_phases,
    levitation_signature,
    multipoint_solve,
    sample_grid,
)
from .config import Document
from .errors import ConfigError, SolverError

METHODS = ("focus", "gspat", "wgs", "levitation")
BUILTIN_SCENES = {"s1": "scene_s1", "s2": "scene_s2", "s3": "scene_s3"}
_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


@dataclass(frozen=True)
class BoardSpec:
    name: str
    position: tuple
    yaw_deg: float = 0.0
    pitch_deg: float = 0.0
    active: bool = True

    @property
    def pose(self) -> Pose:
        return Pose(self.position, math.radians(self.yaw_deg), math.radians(self.pitch_deg))


@dataclass(frozen=True)
class PlaneSpec:
    """Axis-aligned sampling plane such as ``xy@0.05`` (the plane z = 0.05)."""

    u: str
    v: str
    offset: float

    @property
    def normal_axis(self) -> str:
        return ({"x", "y", "z"} - {self.u, self.v}).pop()

    def grid(self, center, extent: float, resolution: float) -> GridSpec:
        c = np.array(center, dtype=float)
        c["xyz".index(self.normal_axis)] = self.offset
        return GridSpec.centered(c, _AXES[self.u], _AXES[self.v], extent, extent, resolution)


def parse_plane(text: str) -> PlaneSpec:
    try:
        axes, off = text.replace(" ", "").split("@")
        offset = float(off)
    except ValueError:
        raise ConfigError(f"plane {text!r} must look like 'xy@0.05'") from None
    if len(axes) != 2 or axes[0] == axes[1] or not set(axes) <= set("xyz"):
        raise ConfigError(f"plane axes {axes!r} must be two distinct letters out of x, y, z")
    return PlaneSpec(axes[0], axes[1], offset)


def parse_targets(text: str) -> list[tuple]:
    out = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        try:
            vals = tuple(float(v) for v in chunk.split(","))
        except ValueError:
            raise ConfigError(f"target {chunk!r} is not a comma-separated triple") from None
        if len(vals) != 3:
            raise ConfigError(f"target {chunk!r} needs three coordinates")
        out.append(vals)
    return out


@dataclass
class Scene:
    boards: list
    medium: Medium = Medium()
    targets: list = field(default_factory=list)
    method: str = "focus"
    iterations: int = 50
    plane: PlaneSpec | None = None
    extent: float = 0.1
    resolution: float = 0.001
    text: str = ""
    path: str | None = None

    def arrays(self):
        return [default_board(b.pose, self.medium) for b in self.boards]

    def with_targets(self, targets) -> "Scene":
        return replace(self, targets=[tuple(float(c) for c in t) for t in targets])


@dataclass
class Solution:
    arrays: list  # (PhasedArrayModel, DriveState) for every active board
    names: list
    achieved: list  # |p| per target, Pa
    residual: float | None = None


def scene_from_document(doc: Document) -> Scene:
    root = doc.root()
    med = root.section("medium")
    medium = Medium(med.number("speed_of_sound", 343.0, lo=1e-6), med.number("frequency", 40_000.0, lo=1e-6))
    med.finish()
    boards = []
    for k, item in enumerate(root.items("boards", [])):
        sec = root.child(item, f"boards[{k}]")
        boards.append(
            BoardSpec(
                sec.string("name", f"board{k}"),
                sec.vector("position", 3),
                sec.number("yaw_deg", 0.0),
                sec.number("pitch_deg", 0.0, lo=0.0, hi=90.0),
                sec.string("drive", "on", choices=("on", "off")) == "on",
            )
        )
        sec.finish()
    targets = []
    for k, t in enumerate(root.items("targets", [])):
        if not (isinstance(t, list) and len(t) == 3 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in t)):
            raise doc.error(f"targets[{k}] must be a list of 3 numbers", "targets")
        targets.append(tuple(float(c) for c in t))
    method = root.string("method", "focus", choices=METHODS)
    iterations = root.integer("iterations", 50, lo=1, hi=100_000)
    plane = root.raw("plane", None)
    if plane is not None:
        if not isinstance(plane, str):
            raise doc.error("'plane' must be a string like 'xy@0.05'", "plane")
        try:
            plane = parse_plane(plane)
        except ConfigError as exc:
            raise doc.error(str(exc), "plane") from None
    extent = root.number("extent", 0.1, lo=0.0)
    resolution = root.number("resolution", 0.001, lo=1e-6)
    root.finish()
    return Scene(boards, medium, targets, method, iterations, plane, extent, resolution, doc.text, doc.path)


def builtin_scene_text(name: str) -> str:
    return resources.files("patswarm").joinpath(f"data/{BUILTIN_SCENES.get(name, name)}.json").read_text()


def load_scene(path) -> Scene:
    """Read a scene document; s1/s2/s3 resolve to the shipped reference scenes."""
    p = str(path)
    if p in BUILTIN_SCENES:
        return scene_from_document(Document(builtin_scene_text(p), f"<builtin {p}>"))
    return scene_from_document(Document.load(path))


def solve_scene(scene: Scene, method: str | None = None, iterations: int | None = None) -> Solution:
    """Drive every active board according to ``method`` and the scene targets."""
    method = method or scene.method
    iterations = scene.iterations if iterations is None else iterations
    if method not in METHODS:
        raise SolverError(f"unknown method {method!r}")
    active = [(b, a) for b, a in zip(scene.boards, scene.arrays()) if b.active]
    names = [b.name for b, _ in active]
    arrays = [a for _, a in active]
    targets = scene.targets
    if not arrays:
        return Solution([], [], [0.0] * len(targets))
    residual = None
    if not targets:
        drives = [DriveState.uniform(len(a)) for a in arrays]
    elif method == "levitation":
        if len(arrays) != 2:
            raise SolverError(f"levitation needs exactly two active boards, got {len(arrays)}")
        drives = list(levitation_signature(arrays[0], arrays[1], targets[0], scene.medium))
    elif method == "focus":
        if len(targets) == 1:
            drives = [focus_phases(a, targets[0], scene.medium) for a in arrays]
        elif len(targets) == len(arrays):
            drives = [focus_phases(a, t, scene.medium) for a, t in zip(arrays, targets)]
        else:
            raise SolverError("method focus needs one target, or one target per board")
    else:
        res = multipoint_solve(arrays, targets, iterations, scene.medium, weighted=method == "wgs")
        drives, residual = list(res.drives), res.residual
    pairs = list(zip(arrays, drives))
    achieved = np.abs(field_at_points(pairs, np.array(targets), scene.medium)).tolist() if targets else []
    return Solution(pairs, names, achieved, residual)


def field_grid(scene: Scene, solution: Solution, grid: GridSpec):
    """Sampled field, with an all-zero grid when nothing radiates."""
    if not solution.arrays:
        return FieldGrid(grid, np.zeros((grid.n_v, grid.n_u), dtype=complex))
    return sample_grid(solution.arrays, grid, scene.medium)


def default_center(scene: Scene) -> tuple:
    if scene.targets:
        return scene.targets[0]
    if scene.boards:
        return tuple(np.mean([b.position for b in scene.boards], axis=0))
    return (0.0, 0.0, 0.0)


__all__ = [
    "BoardSpec",
    "PlaneSpec",
    "Scene",
    "Solution",
    "default_center",
    "field_grid",
    "load_scene",
    "parse_plane",
    "parse_targets",
    "scene_from_document",
    "solve_scene",
]
