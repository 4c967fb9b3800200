"""Drive solvers: single focus, Gerchberg-Saxton multi-point, levitation twin pattern."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NearFieldError, SolverError
from .array import DriveState, Medium, PhasedArrayModel, as_vec3
from .field import NEAR_FIELD_GUARD, element_response

MAX_TARGETS = 32


def _check_target_clear(array: PhasedArrayModel, target: np.ndarray):
    d = np.linalg.norm(array.positions - target, axis=1)
    if np.any(d < NEAR_FIELD_GUARD):
        raise SolverError(f"target {tuple(target)} coincides with a transducer element")


def focus_phases(array: PhasedArrayModel, target, medium: Medium) -> DriveState:
    """Conjugate-phase focus: every element arrives at ``target`` with phase 0."""
    target = as_vec3(target)
    _check_target_clear(array, target)
    d = np.linalg.norm(array.positions - target, axis=1)
    return DriveState(np.mod(-medium.wavenumber * d, 2.0 * np.pi), np.ones(len(array)))


def uniformity_residual(amplitudes) -> float:
    """max/min - 1 over target amplitudes; 0 for perfectly uniform targets."""
    a = np.abs(np.asarray(amplitudes))
    lo = a.min()
    if lo <= 0:
        return math.inf
    return float(a.max() / lo - 1.0)


@dataclass
class MultipointResult:
    drives: list
    achieved: np.ndarray  # complex pressure per target
    residual_history: list = field(default_factory=list)
    raw_residuals: list = field(default_factory=list)
    best_iteration: int = 0

    @property
    def residual(self) -> float:
        return self.residual_history[-1]

    def residual_non_increasing(self) -> bool:
        h = self.residual_history
        return all(b <= a for a, b in zip(h, h[1:]))


def _phase_only(z):
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


def multipoint_solve(
    arrays, targets, iterations: int, medium: Medium, weighted: bool = False
) -> MultipointResult:
    """Phase-only Gerchberg-Saxton over the stacked elements of all ``arrays``.

    Each iteration forward-propagates the drive to the targets, imposes the uniform
    goal amplitude while keeping the propagated phase, back-propagates with the
    conjugate transfer matrix and keeps only the element phase (amplitude 1).
    ``weighted`` scales each target's goal by mean/achieved, as in weighted GS.

    The returned drive is the iterate with the lowest uniformity residual seen so
    far, so ``residual_history`` is non-increasing by construction;
    ``raw_residuals`` keeps the per-iterate values.
    """
    arrays = list(arrays)
    if not arrays:
        raise SolverError("no arrays to solve for")
    pts = np.atleast_2d(np.asarray(targets, dtype=float))
    m = pts.shape[0]
    if not 1 <= m <= MAX_TARGETS:
        raise SolverError(f"need 1..{MAX_TARGETS} targets, got {m}")
    if iterations < 1:
        raise SolverError("iterations must be >= 1")
    for a in range(m):
        for b in range(a + 1, m):
            if np.linalg.norm(pts[a] - pts[b]) < 1e-9:
                raise SolverError(f"duplicate targets {a} and {b}")
    for array in arrays:
        for p in pts:
            _check_target_clear(array, p)

    try:
        H = np.hstack([element_response(array, pts, medium) for array in arrays])
    except NearFieldError as exc:  # pragma: no cover - guarded above
        raise SolverError(str(exc)) from exc
    HH = H.conj().T

    goal = np.ones(m, dtype=complex)
    x = _phase_only(HH @ goal)
    y = H @ x
    best_x, best_y = x, y
    best = uniformity_residual(y)
    history, raw = [best], [best]
    best_it = 0
    weights = np.ones(m)
    for it in range(1, iterations + 1):
        amp = np.abs(y)
        if weighted:
            weights = weights * (amp.mean() / np.where(amp > 0, amp, amp.mean()))
        p = weights * _phase_only(y)
        x = _phase_only(HH @ p)
        y = H @ x
        r = uniformity_residual(y)
        raw.append(r)
        if r < best:
            best, best_x, best_y, best_it = r, x, y, it
        history.append(best)

    drives = []
    offset = 0
    for array in arrays:
        n = len(array)
        xs = best_x[offset : offset + n]
        drives.append(DriveState(np.angle(xs), np.abs(xs)))
        offset += n
    return MultipointResult(drives, best_y, history, raw, best_it)


def levitation_signature(
    array_a: PhasedArrayModel, array_b: PhasedArrayModel, trap_point, medium: Medium
) -> tuple[DriveState, DriveState]:
    """Focus both opposed boards on ``trap_point`` with a pi offset on board B.

    The offset turns the focal maximum into a pressure node at the trap, with
    antinodes a quarter wavelength either side along the board axis.
    """
    trap = as_vec3(trap_point)
    na, nb = array_a.normal, array_b.normal
    angle = math.degrees(math.acos(float(np.clip(na @ -nb, -1.0, 1.0))))
    if angle > 30.0:
        raise SolverError(
            f"boards not opposed: normals are {angle:.1f} deg from anti-parallel (limit 30 deg)"
        )
    if (trap - array_a.center) @ na <= 0 or (trap - array_b.center) @ nb <= 0:
        raise SolverError("trap point is not in front of both boards")
    drive_a = focus_phases(array_a, trap, medium)
    drive_b = focus_phases(array_b, trap, medium).shifted(math.pi)
    return drive_a, drive_b
