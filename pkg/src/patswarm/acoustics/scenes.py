"""Reference board geometries for the three interaction scenarios.

S1 (haptics): one horizontal board focusing 50 mm above its centre.
S2 (audio): two boards side by side, centres 0.16 m apart across the heading,
  both hinged to 45 deg, jointly solved for one focus on their mid-plane that
  lies 0.10 m (twice the S1 range) from each board centre.
S3 (levitation): two vertical boards face to face 0.10 m apart, levitation
  signature at the midpoint; peak taken over the axial standing wave.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array import CALIBRATION_RANGE, Medium, Pose, default_board
from .field import field_at, field_at_points
from .solvers import focus_phases, levitation_signature, multipoint_solve

S2_BOARD_SPACING = 0.16
S2_RANGE = 2 * CALIBRATION_RANGE
S3_SEPARATION = 0.10
BOARD_HEIGHT = 0.10


@dataclass
class ReferenceScene:
    name: str
    arrays: list  # (PhasedArrayModel, DriveState)
    focus: np.ndarray
    peak_pressure: float


def scenario1(medium: Medium = Medium()) -> ReferenceScene:
    board = default_board(Pose((0.0, 0.0, 0.0)), medium)
    focus = np.array([0.0, 0.0, CALIBRATION_RANGE])
    drive = focus_phases(board, focus, medium)
    arrays = [(board, drive)]
    return ReferenceScene("s1_haptics", arrays, focus, abs(field_at(arrays, focus, medium)))


def scenario2(medium: Medium = Medium(), iterations: int = 50) -> ReferenceScene:
    tilt = math.pi / 4
    half = S2_BOARD_SPACING / 2
    boards = [
        default_board(Pose((0.0, y, BOARD_HEIGHT), 0.0, tilt), medium) for y in (-half, half)
    ]
    normal = boards[0].normal
    focus = np.array([0.0, 0.0, BOARD_HEIGHT]) + normal * math.sqrt(S2_RANGE**2 - half**2)
    res = multipoint_solve(boards, [focus], iterations, medium)
    arrays = list(zip(boards, res.drives))
    return ReferenceScene("s2_audio", arrays, focus, abs(field_at(arrays, focus, medium)))


def scenario3(medium: Medium = Medium(), samples: int = 801) -> ReferenceScene:
    half = S3_SEPARATION / 2
    a = default_board(Pose((-half, 0.0, BOARD_HEIGHT), 0.0, math.pi / 2), medium)
    b = default_board(Pose((half, 0.0, BOARD_HEIGHT), math.pi, math.pi / 2), medium)
    trap = np.array([0.0, 0.0, BOARD_HEIGHT])
    da, db = levitation_signature(a, b, trap, medium)
    arrays = [(a, da), (b, db)]
    lam = medium.wavelength
    xs = np.linspace(-lam, lam, samples)
    pts = trap + xs[:, None] * np.array([1.0, 0.0, 0.0])
    peak = float(np.abs(field_at_points(arrays, pts, medium)).max())
    return ReferenceScene("s3_levitation", arrays, trap, peak)


def reference_scenes(medium: Medium = Medium()) -> dict[str, ReferenceScene]:
    return {s.name: s for s in (scenario1(medium), scenario2(medium), scenario3(medium))}
