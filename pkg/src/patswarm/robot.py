"""Bot-side physics and controllers for the two-wheeled base.

Covers exact differential-drive integration, the PI waypoint follower, the
IR ring and its avoidance reflex, the hinge stepper that tilts the array
board, and the dispenser carousel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .acoustics.array import Pose, rot_y, rot_z, wrap_angle
from .errors import GeometryError

STEPS_PER_REV = 2048
MOTOR_RPM = 5.0
MOTOR_RATE = STEPS_PER_REV * MOTOR_RPM / 60.0  # steps/s, full-step

HINGE_ANGLES = (0, 45, 90)
_HINGE_STEPS = {0: 0, 45: 1024, 90: 3072}

IR_BEARINGS_DEG = (-70.0, -35.0, 0.0, 35.0, 70.0)
FRONT_RAYS = (1, 2, 3)


@dataclass(frozen=True)
class DiffDriveParams:
    wheel_base: float = 0.08
    max_wheel_speed: float = 0.15
    body_radius: float = 0.04

    def __post_init__(self):
        if min(self.wheel_base, self.max_wheel_speed, self.body_radius) <= 0:
            raise GeometryError("drive parameters must be positive")


@dataclass(frozen=True)
class DiffDriveState:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0
    v_left: float = 0.0
    v_right: float = 0.0

    def with_wheels(self, v_left, v_right):
        return replace(self, v_left=float(v_left), v_right=float(v_right))

    @property
    def xy(self):
        return np.array([self.x, self.y])


def dd_step(state: DiffDriveState, params: DiffDriveParams, dt: float) -> DiffDriveState:
    """Integrate constant wheel speeds exactly over ``dt``.

    The arc update uses the chord form (length v*dt*sinc(dtheta/2) along the
    mean heading), which equals the ICC rotation but stays well conditioned
    as the turn rate goes to zero.
    """
    if not dt > 0:
        raise GeometryError("dt must be positive")
    lim = params.max_wheel_speed
    vl = min(max(state.v_left, -lim), lim)
    vr = min(max(state.v_right, -lim), lim)
    v = 0.5 * (vl + vr)
    w = (vr - vl) / params.wheel_base
    if abs(w) < 1e-9:
        x = state.x + v * dt * math.cos(state.yaw)
        y = state.y + v * dt * math.sin(state.yaw)
        yaw = state.yaw
    else:
        dth = w * dt
        half = 0.5 * dth
        chord = v * dt * math.sin(half) / half
        x = state.x + chord * math.cos(state.yaw + half)
        y = state.y + chord * math.sin(state.yaw + half)
        yaw = state.yaw + dth
    return DiffDriveState(x, y, wrap_angle(yaw), vl, vr)


@dataclass
class PIState:
    kp: float
    ki: float
    integral: float = 0.0
    clamp: float = 1.0

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0:
            raise GeometryError("PI gains must be non-negative")

    def update(self, error: float, dt: float) -> float:
        self.integral = min(max(self.integral + error * dt, -self.clamp), self.clamp)
        return self.kp * error + self.ki * self.integral

    def reset(self):
        self.integral = 0.0


@dataclass(frozen=True)
class ControllerConfig:
    heading_kp: float = 2.0
    heading_ki: float = 0.1
    speed_kp: float = 1.0
    speed_ki: float = 0.05
    arrival_radius: float = 0.01
    integral_clamp: float = 0.5
    yaw_deadband: float = math.radians(0.5)
    hold_factor: float = 3.0  # after arrival, re-engage only beyond hold_factor * arrival_radius

    def new_states(self) -> tuple[PIState, PIState]:
        return (
            PIState(self.heading_kp, self.heading_ki, clamp=self.integral_clamp),
            PIState(self.speed_kp, self.speed_ki, clamp=self.integral_clamp),
        )


def _limit(v: float, w_half: float, lim: float) -> tuple[float, float]:
    # turning has priority; forward speed takes what is left of the wheel budget
    w_half = min(max(w_half, -lim), lim)
    room = lim - abs(w_half)
    v = min(max(v, -room), room)
    return v - w_half, v + w_half


def pi_waypoint(
    pose: DiffDriveState | Pose,
    waypoint,
    pi_heading: PIState,
    pi_speed: PIState,
    params: DiffDriveParams,
    dt: float,
    config: ControllerConfig = ControllerConfig(),
    goal_velocity=(0.0, 0.0),
    final_yaw: float | None = None,
) -> tuple[float, float, PIState, PIState]:
    """Wheel speeds that drive ``pose`` to ``waypoint``.

    The desired planar velocity is the goal's own velocity plus a PI term along
    the bearing; heading is steered onto that vector and forward speed is its
    projection on the current heading (never negative). A static goal inside
    the arrival radius gives zero translation and resets both integrals, after
    which the bot turns on the spot to ``final_yaw`` if one is given.
    """
    if not dt > 0:
        raise GeometryError("dt must be positive")
    if isinstance(pose, Pose):
        x, y, yaw = pose.position[0], pose.position[1], pose.yaw
    else:
        x, y, yaw = pose.x, pose.y, pose.yaw
    wp = np.asarray(waypoint, dtype=float)
    ex, ey = wp[0] - x, wp[1] - y
    dist = math.hypot(ex, ey)
    gv = np.asarray(goal_velocity, dtype=float)
    moving = float(np.hypot(gv[0], gv[1])) > 1e-9
    half_base = 0.5 * params.wheel_base

    if dist <= config.arrival_radius and not moving:
        pi_heading.reset()
        pi_speed.reset()
        if final_yaw is None:
            return 0.0, 0.0, pi_heading, pi_speed
        err = wrap_angle(final_yaw - yaw)
        if abs(err) <= config.yaw_deadband:
            return 0.0, 0.0, pi_heading, pi_speed
        vl, vr = _limit(0.0, pi_heading.kp * err * half_base, params.max_wheel_speed)
        return vl, vr, pi_heading, pi_speed

    speed = pi_speed.update(dist, dt)
    if dist > 1e-12:
        ux, uy = gv[0] + speed * ex / dist, gv[1] + speed * ey / dist
    else:
        ux, uy = gv[0], gv[1]
    heading_err = wrap_angle(math.atan2(uy, ux) - yaw)
    w = pi_heading.update(heading_err, dt)
    v = max(0.0, math.hypot(ux, uy) * math.cos(heading_err))
    vl, vr = _limit(v, w * half_base, params.max_wheel_speed)
    return vl, vr, pi_heading, pi_speed


# ---- hinge -------------------------------------------------------------------


def hinge_plan(from_angle: int, to_angle: int) -> int:
    """Signed stepper steps between two of the three hinge positions."""
    if from_angle not in _HINGE_STEPS or to_angle not in _HINGE_STEPS:
        raise GeometryError(f"hinge angles must be one of {HINGE_ANGLES}")
    return _HINGE_STEPS[to_angle] - _HINGE_STEPS[from_angle]


def steps_to_angle(steps: float) -> float:
    """Hinge angle (deg) for a step count: 1024 steps span 0-45, the next 2048 span 45-90."""
    s = min(max(steps, 0.0), 3072.0)
    if s <= 1024.0:
        return 45.0 * s / 1024.0
    return 45.0 + 45.0 * (s - 1024.0) / 2048.0


# measured hinge pose error magnitudes per position: (m, deg)
HINGE_NOISE = {
    0: (math.hypot(0.08, 0.01, 0.03) / 100.0, 0.38),
    45: (math.hypot(0.03, 0.73, 0.24) / 100.0, 0.68),
    90: (math.hypot(2.27, 1.73, 0.15) / 100.0, 0.55),
}


@dataclass
class HingeModel:
    current_steps: float = 0.0
    target_steps: float = 0.0
    rate: float = MOTOR_RATE
    offset_pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    offset_yaw: float = 0.0  # deg

    @property
    def angle(self) -> float:
        return steps_to_angle(self.current_steps)

    @property
    def settled(self) -> bool:
        return self.current_steps == self.target_steps

    def command(self, to_angle: int) -> int:
        """Retarget the stepper; returns the signed steps still to run."""
        if to_angle not in _HINGE_STEPS:
            raise GeometryError(f"hinge angles must be one of {HINGE_ANGLES}")
        self.target_steps = float(_HINGE_STEPS[to_angle])
        return int(round(self.target_steps - self.current_steps))


def hinge_step(model: HingeModel, dt: float, rng=None, noise_scale: float = 1.0) -> bool:
    """Advance the stepper at its rate; returns True on the tick it settles.

    On settling a fresh board pose error is drawn from the position's noise
    magnitudes (per-axis sigma = magnitude / sqrt(3)).
    """
    if model.settled:
        return False
    delta = model.target_steps - model.current_steps
    move = min(abs(delta), model.rate * dt)
    model.current_steps += math.copysign(move, delta)
    if abs(model.target_steps - model.current_steps) < 1e-9:
        model.current_steps = model.target_steps
        pos_mag, yaw_mag = HINGE_NOISE[min(HINGE_ANGLES, key=lambda a: abs(a - model.angle))]
        if rng is not None and noise_scale > 0:
            model.offset_pos = rng.normal(0.0, noise_scale * pos_mag / math.sqrt(3), 3)
            model.offset_yaw = float(rng.normal(0.0, noise_scale * yaw_mag))
        else:
            model.offset_pos = np.zeros(3)
            model.offset_yaw = 0.0
        return True
    return False


# ---- mounting geometry -------------------------------------------------------


@dataclass(frozen=True)
class MountGeometry:
    """Where the board and chute sit relative to the base centre (robot frame, m)."""

    pivot_forward: float = 0.05
    pivot_height: float = 0.08
    board_half: float = 0.05
    chute_forward: float = 0.06
    chute_height: float = 0.20

    def board_center_local(self, hinge_deg: float) -> np.ndarray:
        th = math.radians(hinge_deg)
        return np.array([self.pivot_forward, 0.0, self.pivot_height]) + rot_y(th) @ np.array(
            [-self.board_half, 0.0, 0.0]
        )

    def board_pose(self, x, y, yaw, hinge_deg, offset_pos=None, offset_yaw_deg=0.0) -> Pose:
        c = np.array([x, y, 0.0]) + rot_z(yaw) @ self.board_center_local(hinge_deg)
        if offset_pos is not None:
            c = c + np.asarray(offset_pos)
        return Pose(tuple(c), yaw + math.radians(offset_yaw_deg), math.radians(min(max(hinge_deg, 0.0), 90.0)))

    def chute_exit(self, x, y, yaw) -> np.ndarray:
        return np.array(
            [x + self.chute_forward * math.cos(yaw), y + self.chute_forward * math.sin(yaw), self.chute_height]
        )


# ---- dispenser ---------------------------------------------------------------

STEPS_PER_BEAD = STEPS_PER_REV // 4


@dataclass
class DispenserModel:
    hopper_count: int = 20
    carousel_steps: int = 0
    emitted: int = 0
    pending_steps: float = 0.0
    quarter_progress: float = 0.0
    rate: float = MOTOR_RATE

    @property
    def busy(self) -> bool:
        return self.pending_steps > 0

    def request(self, beads: int) -> int:
        """Queue carousel motion for up to ``beads`` beads; returns how many are possible."""
        if beads < 0:
            raise GeometryError("bead count must be non-negative")
        queued = int(round(self.pending_steps)) // STEPS_PER_BEAD
        n = max(0, min(beads, self.hopper_count - queued))
        self.pending_steps += n * STEPS_PER_BEAD
        return n


def dispenser_advance(model: DispenserModel, beads: int) -> tuple[int, list[int]]:
    """Turn the carousel one quarter per bead (capped by the hopper).

    Returns the total steps and the carousel step count at which each bead left
    the chute. Mutates ``model``.
    """
    if beads < 0:
        raise GeometryError("bead count must be non-negative")
    n = min(beads, model.hopper_count)
    emitted_at = []
    for _ in range(n):
        model.carousel_steps += STEPS_PER_BEAD
        model.hopper_count -= 1
        model.emitted += 1
        emitted_at.append(model.carousel_steps)
    return n * STEPS_PER_BEAD, emitted_at


def dispenser_step(model: DispenserModel, dt: float) -> int:
    """Advance queued carousel motion at the motor rate; returns beads released this tick."""
    if not model.busy:
        return 0
    move = min(model.pending_steps, model.rate * dt)
    model.pending_steps -= move
    model.quarter_progress += move
    if model.pending_steps < 1e-9:
        model.pending_steps = 0.0
        model.quarter_progress = round(model.quarter_progress)
    released = 0
    while model.quarter_progress >= STEPS_PER_BEAD - 1e-9 and model.hopper_count > 0:
        model.quarter_progress -= STEPS_PER_BEAD
        model.carousel_steps += STEPS_PER_BEAD
        model.hopper_count -= 1
        model.emitted += 1
        released += 1
    return released


# ---- IR ring -----------------------------------------------------------------


@dataclass(frozen=True)
class IRReading:
    ranges: tuple  # metres, math.inf for no detection
    max_range: float = 0.15

    @property
    def front_min(self) -> tuple[float, int]:
        i = min(FRONT_RAYS, key=lambda k: self.ranges[k])
        return self.ranges[i], i


def _ray_disc(ox, oy, dx, dy, cx, cy, r):
    fx, fy = ox - cx, oy - cy
    b = fx * dx + fy * dy
    c = fx * fx + fy * fy - r * r
    disc = b * b - c
    if disc < 0:
        return math.inf
    s = math.sqrt(disc)
    t = -b - s
    if t < 0:
        t = -b + s
        if t < 0:
            return math.inf
        return 0.0  # origin inside the disc
    return t


def _ray_box(ox, oy, dx, dy, bounds):
    xmin, xmax, ymin, ymax = bounds
    best = math.inf
    if dx > 0:
        best = min(best, (xmax - ox) / dx)
    elif dx < 0:
        best = min(best, (xmin - ox) / dx)
    if dy > 0:
        best = min(best, (ymax - oy) / dy)
    elif dy < 0:
        best = min(best, (ymin - oy) / dy)
    return max(best, 0.0)


def ir_scan(obstacles, pose, params: DiffDriveParams = DiffDriveParams(), max_range: float = 0.15, bounds=None) -> IRReading:
    """Cast the five IR rays from the body centre.

    ``obstacles`` is an iterable of (x, y) centres of other bots (discs of
    ``params.body_radius``); ``bounds`` is (xmin, xmax, ymin, ymax) or None.
    """
    if isinstance(pose, Pose):
        x, y, yaw = pose.position[0], pose.position[1], pose.yaw
    else:
        x, y, yaw = pose.x, pose.y, pose.yaw
    out = []
    for b in IR_BEARINGS_DEG:
        a = yaw + math.radians(b)
        dx, dy = math.cos(a), math.sin(a)
        best = math.inf
        for cx, cy in obstacles:
            best = min(best, _ray_disc(x, y, dx, dy, cx, cy, params.body_radius))
        if bounds is not None:
            best = min(best, _ray_box(x, y, dx, dy, bounds))
        out.append(best if best <= max_range else math.inf)
    return IRReading(tuple(out), max_range)


@dataclass(frozen=True)
class AvoidConfig:
    stop_distance: float = 0.05
    slow_distance: float = 0.10
    turn_bias: float = 0.5  # fraction of max wheel speed at zero clearance


def avoid(
    readings: IRReading,
    commanded: tuple[float, float],
    params: DiffDriveParams = DiffDriveParams(),
    config: AvoidConfig = AvoidConfig(),
) -> tuple[float, float]:
    """Reflex filter on commanded wheel speeds using the three front rays.

    Applies only while the command moves forward: inside ``stop_distance`` the
    bot halts; inside ``slow_distance`` forward speed is scaled by
    reading/slow_distance and a turn away from the nearest ray is added.
    """
    vl, vr = commanded
    lim = params.max_wheel_speed
    vl, vr = min(max(vl, -lim), lim), min(max(vr, -lim), lim)
    v = 0.5 * (vl + vr)
    if v <= 0:
        return vl, vr
    r, ray = readings.front_min
    if r < config.stop_distance:
        return 0.0, 0.0
    if r >= config.slow_distance:
        return vl, vr
    scale = r / config.slow_distance
    w_half = 0.5 * (vr - vl)
    v_new = v * scale
    bearing = IR_BEARINGS_DEG[ray]
    if bearing == 0.0:
        left = readings.ranges[3]
        right = readings.ranges[1]
        away = 1.0 if left > right else -1.0  # +1 = turn left
    else:
        away = -1.0 if bearing > 0 else 1.0
    bias = config.turn_bias * lim * (1.0 - scale)
    w_half = w_half + away * bias
    out_l, out_r = _limit(v_new, w_half, lim)
    return out_l, out_r
