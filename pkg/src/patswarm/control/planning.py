"""Pure planning helpers for the swarm server.

Everything here is a function of its arguments: station geometry per
modality, greedy target assignment, alignment tests, per-bot acoustic
frames and the levitation command schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..acoustics import Medium, PhasedArrayModel, am_envelope, focus_phases, levitation_signature, multipoint_solve
from ..acoustics.array import default_board, wrap_angle
from ..errors import GeometryError, ScheduleError, SolverError
from ..protocol import AcousticFrame, Dispense, MoveTo
from ..robot import MountGeometry

MODALITIES = ("haptic", "audio", "levitation")
MODALITY_HINGE = {"haptic": 0, "audio": 45, "levitation": 90}


@dataclass(frozen=True)
class Tolerances:
    pos_tol: float = 0.01
    yaw_tol_deg: float = 2.0
    lost_distance: float = 0.10
    stale_after: float = 0.25
    dispenser_pos_tol: float = 0.003
    dispenser_yaw_tol_deg: float = 1.0
    settle_time: float = 0.5
    ack_timeout: float = 1.0
    dispense_retry: float = 4.0


@dataclass(frozen=True)
class ContentSpec:
    """What the swarm should render.

    ``targets`` are world-frame focal points: one per hand for haptics, the
    ear for audio, the trap point for levitation. ``axis`` is the heading of
    the levitation axis and ``azimuths`` the bearings (from the ear) of the
    audio stations, both in radians.
    """

    modality: str
    targets: tuple
    mod_frequency: float = 200.0
    depth: float = 1.0
    axis: float = 0.0
    separation: float = 0.10
    azimuths: tuple = ()
    bounds: tuple | None = None
    solver_iterations: int = 5

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise GeometryError(f"unknown modality {self.modality!r}")
        if not 0.0 <= self.depth <= 1.0:
            raise GeometryError("modulation depth must lie in [0, 1]")
        if self.separation <= 0:
            raise GeometryError("separation must be positive")
        tg = tuple(tuple(float(c) for c in t) for t in self.targets)
        if not tg or any(len(t) != 3 for t in tg):
            raise GeometryError("targets must be a non-empty list of 3-vectors")
        object.__setattr__(self, "targets", tg)
        if self.bounds is not None:
            xmin, xmax, ymin, ymax = self.bounds
            for t in tg:
                if not (xmin <= t[0] <= xmax and ymin <= t[1] <= ymax):
                    raise GeometryError(f"target {t} lies outside the workspace bounds")

    @property
    def trap(self):
        return np.array(self.targets[0])

    @property
    def hinge_angle(self) -> int:
        return MODALITY_HINGE[self.modality]

    def with_targets(self, targets) -> "ContentSpec":
        return replace(self, targets=tuple(tuple(t) for t in targets))


@dataclass(frozen=True)
class Station:
    x: float
    y: float
    yaw: float | None  # None: heading unconstrained
    hinge: int | None  # None for bots without a hinge

    @property
    def xy(self):
        return np.array([self.x, self.y])


def _pose_xy_yaw(pose):
    if hasattr(pose, "x") and hasattr(pose, "yaw"):
        return float(pose.x), float(pose.y), float(pose.yaw)
    if hasattr(pose, "position"):
        return float(pose.position[0]), float(pose.position[1]), float(pose.yaw)
    p = tuple(pose)
    return float(p[0]), float(p[1]), float(p[-1]) if len(p) > 2 else 0.0


# ---- stations ------------------------------------------------------------------


def haptic_station(target, mount: MountGeometry = MountGeometry()) -> Station:
    """Base pose that puts the flat board directly under ``target``."""
    off = mount.board_center_local(0)[:2]
    if np.hypot(*off) < 1e-12:
        return Station(float(target[0]), float(target[1]), None, 0)
    # board centre sits off the wheel axle: pin the heading so the offset is known
    return Station(float(target[0] - off[0]), float(target[1] - off[1]), 0.0, 0)


def audio_station(ear, azimuth: float, mount: MountGeometry = MountGeometry(), hinge: int = 45) -> Station:
    """Base pose at bearing ``azimuth`` from the ear with the tilted board aimed at it."""
    c = mount.board_center_local(hinge)
    th = math.radians(hinge)
    rise = float(ear[2]) - c[2]
    if rise <= 0 or math.cos(th) <= 0:
        raise GeometryError("ear must be above the tilted board centre")
    reach = c[0] + rise * math.tan(th)
    return Station(
        float(ear[0]) + reach * math.cos(azimuth),
        float(ear[1]) + reach * math.sin(azimuth),
        wrap_angle(azimuth + math.pi),
        hinge,
    )


def levitation_stations(
    trap, axis: float, separation: float, mount: MountGeometry = MountGeometry()
) -> tuple[Station, Station, Station]:
    """Opposed pair (A facing +axis, B facing -axis) and the dispenser station."""
    c = mount.board_center_local(90)
    if abs(float(trap[2]) - c[2]) > 1e-6:
        raise GeometryError(f"trap height {trap[2]:.4f} m must equal the vertical board centre height {c[2]:.4f} m")
    u = np.array([math.cos(axis), math.sin(axis)])
    t = np.asarray(trap, dtype=float)[:2]
    reach = separation / 2 + c[0]
    a = t - reach * u
    b = t + reach * u
    head = axis + math.pi / 2
    d = t - mount.chute_forward * np.array([math.cos(head), math.sin(head)])
    return (
        Station(float(a[0]), float(a[1]), wrap_angle(axis), 90),
        Station(float(b[0]), float(b[1]), wrap_angle(axis + math.pi), 90),
        Station(float(d[0]), float(d[1]), wrap_angle(head), None),
    )


# ---- assignment / alignment ------------------------------------------------------


def assign_targets(bots, targets) -> dict[int, int]:
    """Greedy nearest matching of bots to targets (planar distance).

    ``bots`` maps bot_id to a pose, or is a sequence whose index is the id.
    Ties go to the lowest bot id, then the lowest target index.
    """
    items = bots.items() if isinstance(bots, dict) else enumerate(bots)
    bxy = {int(i): _pose_xy_yaw(p)[:2] for i, p in items}
    tg = [(float(t[0]), float(t[1])) for t in targets]
    pairs = sorted(
        (math.hypot(bx - tx, by - ty), i, j) for i, (bx, by) in bxy.items() for j, (tx, ty) in enumerate(tg)
    )
    out: dict[int, int] = {}
    used = set()
    for _, i, j in pairs:
        if i in out or j in used:
            continue
        out[i] = j
        used.add(j)
    return out


def alignment_check(
    pose, station, yaw_target: float | None = None, pos_tol: float = 0.01, yaw_tol: float = math.radians(2.0)
) -> bool:
    x, y, yaw = _pose_xy_yaw(pose)
    if math.hypot(float(station[0]) - x, float(station[1]) - y) > pos_tol:
        return False
    return yaw_target is None or abs(wrap_angle(yaw - yaw_target)) <= yaw_tol


# ---- frames -----------------------------------------------------------------------


def board_for(pose, hinge_deg: float, mount: MountGeometry = MountGeometry(), medium: Medium = Medium(), offset_pos=None, offset_yaw_deg=0.0) -> PhasedArrayModel:
    x, y, yaw = _pose_xy_yaw(pose)
    return default_board(mount.board_pose(x, y, yaw, hinge_deg, offset_pos, offset_yaw_deg), medium)


def compute_frames(
    boards: dict, spec: ContentSpec, t: float, medium: Medium = Medium(), frame_id: int = 0, assignment: dict | None = None
) -> dict[int, AcousticFrame]:
    """One quantised AcousticFrame per bot in ``boards`` (bot_id -> array)."""
    ids = sorted(boards)
    if not ids:
        return {}
    drives = {}
    try:
        if spec.modality == "haptic":
            env = am_envelope(spec.mod_frequency, spec.depth, t)
            if assignment is None:
                assignment = dict(zip(ids, range(len(spec.targets))))
            for i in ids:
                if i in assignment:
                    drives[i] = focus_phases(boards[i], spec.targets[assignment[i]], medium).scaled(env)
        elif spec.modality == "audio":
            env = am_envelope(spec.mod_frequency, spec.depth, t)
            res = multipoint_solve([boards[i] for i in ids], [spec.targets[0]], spec.solver_iterations, medium)
            drives = {i: d.scaled(env) for i, d in zip(ids, res.drives)}
        else:
            if len(ids) != 2:
                raise SolverError(f"levitation needs exactly two boards, got {len(ids)}")
            da, db = levitation_signature(boards[ids[0]], boards[ids[1]], spec.trap, medium)
            drives = {ids[0]: da, ids[1]: db}
    except SolverError as exc:
        raise SolverError(f"bots {ids}: {exc}") from exc
    return {i: AcousticFrame.from_drive(frame_id, d) for i, d in drives.items()}


# ---- levitation schedule ----------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleStep:
    action: str  # verify | stream | move_dispenser | dispense | classify | report
    bots: tuple = ()
    message: object = None


@dataclass(frozen=True)
class LevitationPlan:
    pair: tuple
    dispenser: int
    stations: dict = field(default_factory=dict)
    steps: tuple = ()


def levitation_orchestrate(
    registry,
    trap,
    dispenser_id: int | None = None,
    axis: float = 0.0,
    separation: float = 0.10,
    mount: MountGeometry = MountGeometry(),
    tolerances: Tolerances = Tolerances(),
    assignment: dict | None = None,
) -> LevitationPlan:
    """Ordered command schedule for one levitation attempt.

    verify -> stream -> [move dispenser if its chute is off the trap
    vertical] -> Dispense{1} -> classify -> report. ``assignment`` maps each
    acousto bot to side 0 (faces +axis) or 1; by default the lower id takes 0.
    """
    acousto = registry.ids("acousto")
    dispensers = registry.ids("dispenser")
    if len(acousto) != 2:
        raise ScheduleError(f"levitation needs exactly two acousto bots, registry has {len(acousto)}")
    if dispenser_id is None:
        if not dispensers:
            raise ScheduleError("no dispenser bot in the registry")
        dispenser_id = dispensers[0]
    elif dispenser_id not in dispensers:
        raise ScheduleError(f"bot {dispenser_id} is not a dispenser")
    sa, sb, sd = levitation_stations(trap, axis, separation, mount)
    pair = tuple(acousto)
    steps = [ScheduleStep("verify", pair), ScheduleStep("stream", pair)]
    rec = registry[dispenser_id]
    on_station = False
    if rec.pose is not None:
        x, y, _, yaw = rec.pose
        chute = mount.chute_exit(x, y, yaw)
        on_station = (
            math.hypot(chute[0] - trap[0], chute[1] - trap[1]) <= tolerances.dispenser_pos_tol
            and abs(wrap_angle(yaw - sd.yaw)) <= math.radians(tolerances.dispenser_yaw_tol_deg)
        )
    if not on_station:
        steps.append(ScheduleStep("move_dispenser", (dispenser_id,), MoveTo.from_si(sd.x, sd.y, sd.yaw)))
    steps += [
        ScheduleStep("dispense", (dispenser_id,), Dispense(1)),
        ScheduleStep("classify", (dispenser_id,)),
        ScheduleStep("report"),
    ]
    side = assignment if assignment is not None else {pair[0]: 0, pair[1]: 1}
    stations = {i: (sa, sb)[side[i]] for i in pair}
    stations[dispenser_id] = sd
    return LevitationPlan(pair, dispenser_id, stations, tuple(steps))
