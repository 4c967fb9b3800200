"""Array geometry: medium, poses, transducer elements and the 8x8 board layout."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from ..errors import GeometryError

SPEED_OF_SOUND_AIR = 343.0
CARRIER_FREQUENCY = 40_000.0
PISTON_RADIUS = 4.5e-3
ELEMENT_PITCH = 10.5e-3
REFERENCE_DISTANCE = 1.0

# single 8x8 board focused on-axis at this range reproduces this pressure
CALIBRATION_RANGE = 0.05
CALIBRATION_PRESSURE = 4469.90

BOARD_ROWS = 8
BOARD_COLS = 8


def as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise GeometryError(f"expected a 3-vector, got shape {a.shape}")
    return a


def wrap_angle(a: float) -> float:
    """Wrap an angle in radians to [-pi, pi)."""
    if -math.pi <= a < math.pi:
        return float(a)  # exact pass-through; the shift below costs an ulp
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w < 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


@dataclass(frozen=True)
class Medium:
    speed_of_sound: float = SPEED_OF_SOUND_AIR
    frequency: float = CARRIER_FREQUENCY

    def __post_init__(self):
        if not self.speed_of_sound > 0 or not self.frequency > 0:
            raise GeometryError("speed of sound and frequency must be positive")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi * self.frequency / self.speed_of_sound

    @property
    def wavelength(self) -> float:
        return self.speed_of_sound / self.frequency


@dataclass(frozen=True)
class Pose:
    """Rigid pose of a board: position, yaw about world z, hinge pitch.

    Pitch tilts the board normal from +z towards the heading direction, so
    pitch 0 faces up and pitch pi/2 faces forward along the yaw heading.
    """

    position: tuple = (0.0, 0.0, 0.0)
    yaw: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(c) for c in as_vec3(self.position)))
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))
        p = float(self.pitch)
        if p < -1e-12 or p > math.pi / 2 + 1e-12:
            raise GeometryError(f"pitch {p} rad outside [0, pi/2]")
        object.__setattr__(self, "pitch", min(max(p, 0.0), math.pi / 2))

    def rotation(self) -> np.ndarray:
        return rot_z(self.yaw) @ rot_y(self.pitch)

    @property
    def normal(self) -> np.ndarray:
        return self.rotation()[:, 2]


@dataclass(frozen=True)
class TransducerElement:
    position: tuple = (0.0, 0.0, 0.0)
    normal: tuple = (0.0, 0.0, 1.0)
    radius: float = PISTON_RADIUS
    p0: float = 1.0

    def __post_init__(self):
        n = as_vec3(self.normal)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise GeometryError(f"element normal {tuple(n)} is not a unit vector")
        if not self.radius > 0:
            raise GeometryError("piston radius must be positive")
        if self.p0 < 0:
            raise GeometryError("reference pressure must be non-negative")
        object.__setattr__(self, "position", tuple(float(c) for c in as_vec3(self.position)))
        object.__setattr__(self, "normal", tuple(float(c) for c in n))


@dataclass(frozen=True, eq=False)
class PhasedArrayModel:
    """Element positions/normals as (N, 3) arrays in row-major order."""

    positions: np.ndarray
    normals: np.ndarray
    radius: float
    p0: float
    pitch: float
    rows: int
    cols: int
    pose: Pose | None = None

    def __len__(self):
        return self.positions.shape[0]

    @property
    def elements(self) -> list[TransducerElement]:
        return [
            TransducerElement(tuple(p), tuple(n), self.radius, self.p0)
            for p, n in zip(self.positions, self.normals)
        ]

    @property
    def center(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    @property
    def normal(self) -> np.ndarray:
        return self.normals[0]

    def transformed(self, rotation, translation) -> "PhasedArrayModel":
        """Apply x -> R x + t to every element; the result carries no Pose."""
        R = np.asarray(rotation, dtype=float)
        t = as_vec3(translation)
        return replace(
            self,
            positions=self.positions @ R.T + t,
            normals=self.normals @ R.T,
            pose=None,
        )


@dataclass
class DriveState:
    """Per-element phase (rad, [0, 2pi)) and amplitude ([0, 1])."""

    phases: np.ndarray
    amplitudes: np.ndarray = field(default=None)

    def __post_init__(self):
        ph = np.mod(np.asarray(self.phases, dtype=float), 2.0 * np.pi)
        # mod can return exactly 2pi for tiny negative inputs
        ph[ph >= 2.0 * np.pi] = 0.0
        self.phases = ph
        if self.amplitudes is None:
            self.amplitudes = np.ones_like(ph)
        amp = np.asarray(self.amplitudes, dtype=float)
        if amp.shape != ph.shape:
            raise GeometryError("phases and amplitudes differ in length")
        if np.any(amp < -1e-12) or np.any(amp > 1 + 1e-12):
            raise GeometryError("amplitudes must lie in [0, 1]")
        self.amplitudes = np.clip(amp, 0.0, 1.0)

    def __len__(self):
        return self.phases.shape[0]

    def complex(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phases)

    def shifted(self, delta: float) -> "DriveState":
        return DriveState(self.phases + delta, self.amplitudes.copy())

    def scaled(self, factor: float) -> "DriveState":
        return DriveState(self.phases.copy(), self.amplitudes * factor)

    @classmethod
    def uniform(cls, n: int, phase: float = 0.0, amplitude: float = 1.0) -> "DriveState":
        return cls(np.full(n, phase), np.full(n, amplitude))


@lru_cache(maxsize=32)
def _local_layout(rows: int, cols: int, pitch: float) -> np.ndarray:
    r, c = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    local = np.zeros((rows * cols, 3))
    local[:, 0] = (c.ravel() - (cols - 1) / 2.0) * pitch
    local[:, 1] = (r.ravel() - (rows - 1) / 2.0) * pitch
    local.flags.writeable = False
    return local


def build_array(
    rows: int = BOARD_ROWS,
    cols: int = BOARD_COLS,
    pitch: float = ELEMENT_PITCH,
    pose: Pose | None = None,
    element_template: TransducerElement | None = None,
) -> PhasedArrayModel:
    """Lay out a rows x cols grid centred on the board origin and place it at ``pose``.

    Element (r, c) sits at local ((c - (cols-1)/2) * pitch, (r - (rows-1)/2) * pitch, 0),
    row-major. The template supplies radius, p0 and the board-local normal.
    """
    if rows < 1 or cols < 1:
        raise GeometryError("rows and cols must be >= 1")
    if not pitch > 0:
        raise GeometryError("pitch must be positive")
    pose = pose if pose is not None else Pose()
    template = element_template if element_template is not None else default_element()

    local = _local_layout(rows, cols, pitch)
    R = pose.rotation()
    positions = local @ R.T + np.asarray(pose.position)
    normal = R @ np.asarray(template.normal)
    normals = np.tile(normal, (rows * cols, 1))
    return PhasedArrayModel(
        positions=positions,
        normals=normals,
        radius=template.radius,
        p0=template.p0,
        pitch=pitch,
        rows=rows,
        cols=cols,
        pose=pose,
    )


@lru_cache(maxsize=16)
def calibrated_p0(
    medium: Medium = Medium(),
    radius: float = PISTON_RADIUS,
    pitch: float = ELEMENT_PITCH,
    focus_range: float = CALIBRATION_RANGE,
    target_pressure: float = CALIBRATION_PRESSURE,
) -> float:
    """Source strength that makes one focused 8x8 board reach ``target_pressure`` on-axis."""
    from .field import element_response

    board = build_array(
        BOARD_ROWS, BOARD_COLS, pitch, Pose(), TransducerElement(radius=radius, p0=1.0)
    )
    h = element_response(board, np.array([[0.0, 0.0, focus_range]]), medium)[0]
    return target_pressure / float(np.sum(np.abs(h)))


def default_element(medium: Medium = Medium()) -> TransducerElement:
    return TransducerElement(radius=PISTON_RADIUS, p0=calibrated_p0(medium))


def default_board(pose: Pose | None = None, medium: Medium = Medium()) -> PhasedArrayModel:
    return build_array(BOARD_ROWS, BOARD_COLS, ELEMENT_PITCH, pose, default_element(medium))
