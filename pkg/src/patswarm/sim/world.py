"""Discrete-time world: bots, hinges, dispensers, beads and the motion tracker."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..acoustics.array import wrap_angle
from ..control.server import SERVER, BeadOutcome
from ..protocol import (
    AcousticFrame,
    Ack,
    CodecError,
    Dispense,
    MoveTo,
    PoseReport,
    SequenceCounter,
    SequenceTracker,
    SetHinge,
    Stop,
    decode,
    encode,
)
from ..robot import (
    AvoidConfig,
    ControllerConfig,
    DiffDriveParams,
    DiffDriveState,
    DispenserModel,
    HingeModel,
    MountGeometry,
    avoid,
    dd_step,
    dispenser_step,
    hinge_step,
    ir_scan,
    pi_waypoint,
)
from .classifier import ClassifierConfig, levitation_classifier

TRACKER = "tracker"
_HINGE_WIRE = {0: 0, 4500: 45, 9000: 90}


def tracker_sample(state: DiffDriveState, sigma_pos: float, sigma_yaw_deg: float, rng) -> tuple[float, float, float]:
    """Noisy (x, y, yaw) observation; always draws three normals."""
    z = rng.standard_normal(3)
    return (
        state.x + sigma_pos * float(z[0]),
        state.y + sigma_pos * float(z[1]),
        wrap_angle(state.yaw + math.radians(sigma_yaw_deg) * float(z[2])),
    )


class BotAgent:
    """One robot: true state plus the on-board controller and its pose estimate."""

    def __init__(
        self,
        bot_id: int,
        kind: str,
        state: DiffDriveState,
        params: DiffDriveParams = DiffDriveParams(),
        controller: ControllerConfig = ControllerConfig(),
        avoid_config: AvoidConfig = AvoidConfig(),
        filter_gain: float = 0.3,
        hopper: int = 20,
    ):
        self.bot_id = bot_id
        self.kind = kind
        self.state = state
        self.params = params
        self.controller = controller
        self.avoid_config = avoid_config
        self.filter_gain = filter_gain
        self.hinge = HingeModel() if kind == "acousto" else None
        self.dispenser = DispenserModel(hopper_count=hopper) if kind == "dispenser" else None
        self.est = DiffDriveState(state.x, state.y, state.yaw)
        self.goal: MoveTo | None = None
        self.goal_time = 0.0
        self.holding = False
        self.pi = controller.new_states()
        self.frame: AcousticFrame | None = None
        self.inbox: list = []
        self.outbox: list = []
        self.rx = SequenceTracker()
        self.tx = SequenceCounter()
        self.pending_hinge: int | None = None
        self.pending_dispense: int | None = None
        self.corrupt = 0

    def _ack(self, seq, status):
        self.outbox.append(Ack(seq, status))

    def process_inbox(self, now: float):
        inbox, self.inbox = self.inbox, []
        for src, data in inbox:
            try:
                msg, hdr = decode(data)
            except CodecError:
                self.corrupt += 1
                continue
            if not self.rx.accept((src, hdr.bot_id), hdr.seq):
                continue
            if isinstance(msg, MoveTo):
                if self.goal is None or (msg.x, msg.y, msg.speed) != (self.goal.x, self.goal.y, self.goal.speed):
                    self.holding = False
                self.goal, self.goal_time = msg, now
            elif isinstance(msg, Stop):
                self.goal = None
                self.holding = False
                self.pi = self.controller.new_states()
            elif isinstance(msg, SetHinge):
                if self.hinge is None or msg.target not in _HINGE_WIRE:
                    self._ack(hdr.seq, Ack.REJECTED)
                    continue
                self.hinge.command(_HINGE_WIRE[msg.target])
                self._ack(hdr.seq, Ack.RECEIVED)
                if self.hinge.settled:
                    self._ack(hdr.seq, Ack.DONE)
                    self.pending_hinge = None
                else:
                    self.pending_hinge = hdr.seq
            elif isinstance(msg, Dispense):
                if self.dispenser is None:
                    self._ack(hdr.seq, Ack.REJECTED)
                    continue
                self._ack(hdr.seq, Ack.RECEIVED)
                if self.dispenser.request(msg.count) == 0 and not self.dispenser.busy:
                    self._ack(hdr.seq, Ack.DONE)
                else:
                    self.pending_dispense = hdr.seq
            elif isinstance(msg, AcousticFrame):
                if self.hinge is not None:
                    self.frame = msg
            elif isinstance(msg, PoseReport) and msg.source_id == self.bot_id:
                g = self.filter_gain
                rx, ry, _ = msg.position_m
                e = self.est
                self.est = DiffDriveState(
                    e.x + g * (rx - e.x), e.y + g * (ry - e.y), wrap_angle(e.yaw + g * wrap_angle(msg.yaw_rad - e.yaw))
                )

    def wheel_command(self, now: float, dt: float, obstacles, bounds) -> tuple[float, float]:
        if self.goal is None:
            return 0.0, 0.0
        wx, wy = self.goal.position_m
        yaw = self.goal.yaw_rad
        speed = self.goal.speed_mps
        gv = (0.0, 0.0)
        final = yaw
        if speed > 0 and yaw is not None:
            gv = (speed * math.cos(yaw), speed * math.sin(yaw))
            lead = now - self.goal_time
            wx, wy = wx + gv[0] * lead, wy + gv[1] * lead
            final = None
        else:
            # static goal: once arrived, sensor noise alone must not restart the approach
            cfg = self.controller
            dist = math.hypot(wx - self.est.x, wy - self.est.y)
            if dist <= cfg.arrival_radius:
                self.holding = True
            elif dist > cfg.hold_factor * cfg.arrival_radius:
                self.holding = False
            if self.holding:
                wx, wy = self.est.x, self.est.y
        h, s = self.pi
        vl, vr, h, s = pi_waypoint(self.est, (wx, wy, 0.0), h, s, self.params, dt, self.controller, gv, final)
        self.pi = (h, s)
        reading = ir_scan(obstacles, self.state, self.params, bounds=bounds)
        return avoid(reading, (vl, vr), self.params, self.avoid_config)


@dataclass
class Bead:
    bead_id: int
    position: np.ndarray
    t_release: float
    dz_cm: float
    dpsi_deg: float
    lateral_cm: float
    status: str = "falling"  # falling | levitated | at-rest


@dataclass
class LevitationGeometry:
    trap: np.ndarray
    axis: float
    dispenser_yaw: float


@dataclass
class World:
    bots: dict
    params: DiffDriveParams = DiffDriveParams()
    mount: MountGeometry = MountGeometry()
    bounds: tuple | None = None
    levitation: LevitationGeometry | None = None
    classifier: ClassifierConfig = ClassifierConfig()
    override: dict = field(default_factory=dict)
    fall_speed: float = 0.5
    hinge_noise_scale: float = 0.0
    sigma_pos: float = 0.0
    sigma_yaw_deg: float = 0.0
    clock: float = 0.0
    beads: list = field(default_factory=list)
    collisions: int = 0
    tracker_tx: SequenceCounter = field(default_factory=SequenceCounter)

    def _overlaps(self, a: DiffDriveState, b: DiffDriveState) -> bool:
        return math.hypot(a.x - b.x, a.y - b.y) < 2 * self.params.body_radius - 1e-12

    def _outside(self, s: DiffDriveState) -> bool:
        if self.bounds is None:
            return False
        r = self.params.body_radius
        xmin, xmax, ymin, ymax = self.bounds
        return s.x - r < xmin or s.x + r > xmax or s.y - r < ymin or s.y + r > ymax

    def validate(self):
        ids = sorted(self.bots)
        for k, i in enumerate(ids):
            if self._outside(self.bots[i].state):
                raise ValueError(f"bot {i} starts outside the workspace")
            for j in ids[k + 1 :]:
                if self._overlaps(self.bots[i].state, self.bots[j].state):
                    raise ValueError(f"bots {i} and {j} start overlapping")

    def _resolve(self, old: dict, new: dict) -> dict:
        """Revert movers involved in overlaps or leaving the workspace; they halt."""
        moved = {i for i in new if (new[i].x, new[i].y) != (old[i].x, old[i].y)}
        ids = sorted(new)
        changed = True
        while changed:
            changed = False
            bad = {i for i in ids if i in moved and self._outside(new[i])}
            for k, i in enumerate(ids):
                for j in ids[k + 1 :]:
                    if self._overlaps(new[i], new[j]):
                        bad.update(x for x in (i, j) if x in moved)
            for i in sorted(bad):
                new[i] = old[i].with_wheels(0.0, 0.0)
                moved.discard(i)
                self.collisions += 1
                changed = True
        return new

    def _spawn_bead(self, bot: BotAgent, now: float):
        s = bot.state
        exit_ = self.mount.chute_exit(s.x, s.y, s.yaw)
        dz = dpsi = lateral = 0.0
        if self.levitation is not None:
            lg = self.levitation
            u = np.array([math.cos(lg.axis), math.sin(lg.axis)])
            d = exit_[:2] - lg.trap[:2]
            dz = float(d @ u) * 100.0
            lateral = float(u[0] * d[1] - u[1] * d[0]) * 100.0
            dpsi = math.degrees(wrap_angle(s.yaw - lg.dispenser_yaw))
        dz = float(self.override.get("dz_cm", dz))
        dpsi = float(self.override.get("dpsi_deg", dpsi))
        self.beads.append(Bead(len(self.beads), exit_, now, dz, dpsi, lateral))

    def step(self, now: float, dt: float, net, rng, emit_tracker: bool = True) -> list[BeadOutcome]:
        """Advance one tick: commands, motion, actuators, beads, tracker."""
        ids = sorted(self.bots)
        for i in ids:
            bot = self.bots[i]
            bot.process_inbox(now)
        for i in ids:
            self._flush(self.bots[i], net, now)

        old = {i: self.bots[i].state for i in ids}
        wheels = {}
        for i in ids:
            others = [(old[j].x, old[j].y) for j in ids if j != i]
            wheels[i] = self.bots[i].wheel_command(now, dt, others, self.bounds)
        new = {i: dd_step(old[i].with_wheels(*wheels[i]), self.params, dt) for i in ids}
        new = self._resolve(old, new)
        for i in ids:
            bot = self.bots[i]
            bot.state = new[i]
            if (new[i].x, new[i].y, new[i].yaw) != (old[i].x, old[i].y, old[i].yaw):
                bot.est = dd_step(bot.est.with_wheels(new[i].v_left, new[i].v_right), self.params, dt)

        for i in ids:
            bot = self.bots[i]
            if bot.hinge is not None and hinge_step(bot.hinge, dt, rng, self.hinge_noise_scale):
                if bot.pending_hinge is not None:
                    bot.outbox.append(Ack(bot.pending_hinge, Ack.DONE))
                    bot.pending_hinge = None
            if bot.dispenser is not None:
                for _ in range(dispenser_step(bot.dispenser, dt)):
                    self._spawn_bead(bot, now + dt)
                if bot.pending_dispense is not None and not bot.dispenser.busy:
                    bot.outbox.append(Ack(bot.pending_dispense, Ack.DONE))
                    bot.pending_dispense = None
            self._flush(bot, net, now)

        outcomes = []
        floor = self.levitation.trap[2] if self.levitation is not None else 0.0
        for b in self.beads:
            if b.status != "falling":
                continue
            b.position = b.position - np.array([0.0, 0.0, self.fall_speed * dt])
            if b.position[2] <= floor + 1e-12:
                b.position[2] = floor
                ok = self.levitation is not None and levitation_classifier(b.dz_cm, b.dpsi_deg, self.classifier)
                b.status = "levitated" if ok else "at-rest"
                outcomes.append(BeadOutcome(round(now + dt, 6), b.dz_cm, b.dpsi_deg, ok))

        if emit_tracker:
            t_obs = now + dt
            for i in ids:
                x, y, yaw = tracker_sample(self.bots[i].state, self.sigma_pos, self.sigma_yaw_deg, rng)
                rep = PoseReport.from_si(i, x, y, 0.0, yaw, t_obs)
                for dst in (SERVER, i):
                    seq = self.tracker_tx.next((dst, i))
                    net.send(TRACKER, dst, encode(rep, i, seq), t_obs)
        self.clock = now + dt
        return outcomes

    @staticmethod
    def _flush(bot: BotAgent, net, now):
        for msg in bot.outbox:
            net.send(bot.bot_id, SERVER, encode(msg, bot.bot_id, bot.tx.next(SERVER)), now)
        bot.outbox = []


def world_step(world: World, net, rng, dt: float, emit_tracker: bool = True) -> list[BeadOutcome]:
    return world.step(world.clock, dt, net, rng, emit_tracker)
