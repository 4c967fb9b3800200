"""The swarm server: a single reactor that turns tracker reports into bot commands.

Inbound datagrams are queued by ``receive`` and applied in arrival order at
the start of ``step``. Control decisions run on control ticks, acoustic
frames on frame ticks; both are produced only by ``step``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..acoustics import Medium
from ..errors import RosterError, SolverError
from ..protocol import (
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
from ..robot import MountGeometry
from .planning import (
    ContentSpec,
    Station,
    Tolerances,
    alignment_check,
    assign_targets,
    audio_station,
    board_for,
    compute_frames,
    haptic_station,
    levitation_orchestrate,
    levitation_stations,
)
from .registry import Registry

SERVER = "server"


class Phase(str, enum.Enum):
    APPROACHING = "approaching"
    ALIGNING = "aligning"
    FOLLOWING = "following"
    VISUALIZING = "visualizing"


@dataclass
class BeadOutcome:
    t: float
    dz_cm: float
    dpsi_deg: float
    levitated: bool


@dataclass
class _Pending:
    seq: int
    sent_at: float
    acked: bool = False
    done: bool = False


class SwarmServer:
    def __init__(
        self,
        roster: dict,
        content: ContentSpec,
        tolerances: Tolerances = Tolerances(),
        medium: Medium = Medium(),
        mount: MountGeometry = MountGeometry(),
        bounds: tuple | None = None,
        smoothing: float = 0.3,
    ):
        self.registry = Registry(roster, smoothing)
        self.content = content
        self.tol = tolerances
        self.medium = medium
        self.mount = mount
        self.bounds = bounds
        acousto = self.registry.ids("acousto")
        if not acousto:
            raise RosterError("no acousto bots in the roster")
        if content.modality == "levitation":
            if len(acousto) != 2 or not self.registry.ids("dispenser"):
                raise RosterError("levitation needs two acousto bots and a dispenser")
        self.phase = Phase.APPROACHING
        self.transitions: list[tuple[float, str, str]] = []
        self.diagnostics: list[tuple[float, str]] = []
        self.assignment: dict[int, int] | None = None
        self.streaming = False
        self.complete = False
        self.outcome: BeadOutcome | None = None
        self.bead_outcomes: list[BeadOutcome] = []
        self.schedule_log: list[tuple[float, str]] = []
        self.sent: dict[str, int] = {}
        self.corrupt = 0
        self._tx = SequenceCounter()
        self._rx = SequenceTracker()
        self._inbox: list = []
        self._hinge: dict[int, _Pending] = {}
        self._dispense: _Pending | None = None
        self._plan = None
        self._cursor = 0
        self._disp_since = None
        self._prev_stations = None
        self._stale_flag: dict[int, bool] = {}
        self._velocity: dict[int, np.ndarray] = {}

    # ---- inbound ------------------------------------------------------------------

    @property
    def stale(self) -> int:
        return self._rx.stale

    def receive(self, src, data: bytes):
        self._inbox.append((src, data))

    def notify_bead(self, outcome: BeadOutcome):
        self.bead_outcomes.append(outcome)

    def _ingest(self, now):
        inbox, self._inbox = self._inbox, []
        for src, data in inbox:
            try:
                msg, hdr = decode(data)
            except CodecError as exc:
                self.corrupt += 1
                self._diag(now, f"undecodable datagram from {src}: {exc.code.name}")
                continue
            if not self._rx.accept((src, hdr.bot_id), hdr.seq):
                continue
            if isinstance(msg, PoseReport):
                self.registry.update_pose(msg, now)
            elif isinstance(msg, Ack):
                self._on_ack(hdr.bot_id, msg, now)

    def _on_ack(self, bot_id, ack: Ack, now):
        if bot_id in self.registry:
            self.registry[bot_id].last_seen = now
        pend = self._hinge.get(bot_id)
        if pend is not None and ack.acked_seq == pend.seq:
            if ack.status == Ack.REJECTED:
                self._diag(now, f"bot {bot_id} rejected SetHinge")
            pend.acked = True
            if ack.status == Ack.DONE:
                pend.done = True
                self.registry[bot_id].hinge_angle = self.content.hinge_angle
        d = self._dispense
        if d is not None and ack.acked_seq == d.seq and self._plan is not None and bot_id == self._plan.dispenser:
            d.acked = True
            d.done = d.done or ack.status == Ack.DONE

    def _diag(self, now, text):
        self.diagnostics.append((round(now, 6), text))

    # ---- stations --------------------------------------------------------------------

    def _assign(self, content: ContentSpec):
        reg = self.registry
        acousto = reg.ids("acousto")
        poses = {i: reg[i].smooth for i in acousto}
        if content.modality == "haptic":
            pts = [haptic_station(t, self.mount).xy for t in content.targets]
        elif content.modality == "audio":
            pts = [audio_station(content.targets[0], a, self.mount).xy for a in content.azimuths]
        else:
            sa, sb, _ = levitation_stations(content.trap, content.axis, content.separation, self.mount)
            pts = [sa.xy, sb.xy]
        self.assignment = assign_targets(poses, pts)

    def stations(self, content: ContentSpec | None = None) -> dict[int, Station]:
        content = content or self.content
        if self.assignment is None:
            return {}
        out = {}
        if content.modality == "haptic":
            for i, j in self.assignment.items():
                out[i] = haptic_station(content.targets[j], self.mount)
        elif content.modality == "audio":
            for i, j in self.assignment.items():
                out[i] = audio_station(content.targets[0], content.azimuths[j], self.mount)
        else:
            sa, sb, sd = levitation_stations(content.trap, content.axis, content.separation, self.mount)
            for i, j in self.assignment.items():
                out[i] = (sa, sb)[j]
            out[self.dispenser_id] = sd
        return out

    @property
    def dispenser_id(self) -> int | None:
        d = self.registry.ids("dispenser")
        return d[0] if d else None

    def _clamp(self, x, y, now):
        if self.bounds is None:
            return x, y
        xmin, xmax, ymin, ymax = self.bounds
        cx, cy = min(max(x, xmin), xmax), min(max(y, ymin), ymax)
        if (cx, cy) != (x, y):
            self._diag(now, f"station ({x:.3f}, {y:.3f}) clamped to workspace")
        return cx, cy

    def _move(self, bot_id, st: Station, now) -> MoveTo:
        x, y = self._clamp(st.x, st.y, now)
        v = self._velocity.get(bot_id, np.zeros(2))
        speed = float(np.hypot(v[0], v[1]))
        if speed >= 0.001:
            # moving goal: heading field carries the direction of motion
            return MoveTo.from_si(x, y, math.atan2(v[1], v[0]), min(speed, 65.535))
        return MoveTo.from_si(x, y, st.yaw)

    def _error(self, bot_id, st: Station) -> float:
        rec = self.registry[bot_id]
        if rec.pose is None:
            return math.inf
        return math.hypot(rec.pose[0] - st.x, rec.pose[1] - st.y)

    def _aligned(self, bot_id, st: Station, pos_tol=None, yaw_tol_deg=None) -> bool:
        rec = self.registry[bot_id]
        if rec.smooth is None:
            return False
        return alignment_check(
            rec.smooth,
            (st.x, st.y),
            st.yaw,
            self.tol.pos_tol if pos_tol is None else pos_tol,
            math.radians(self.tol.yaw_tol_deg if yaw_tol_deg is None else yaw_tol_deg),
        )

    # ---- phase machine ------------------------------------------------------------------

    def _transition(self, to: Phase, now):
        self.transitions.append((round(now, 6), self.phase.value, to.value))
        self.phase = to
        if to is Phase.APPROACHING:
            self.streaming = False
            self._plan = None
            self._cursor = 0

    def _update_velocity(self, stations, now):
        prev = self._prev_stations
        self._velocity = {}
        if prev is not None and now > prev[0]:
            dt = now - prev[0]
            for i, st in stations.items():
                if i in prev[1]:
                    self._velocity[i] = (st.xy - prev[1][i]) / dt
        self._prev_stations = (now, {i: st.xy for i, st in stations.items()})

    def phase_step(self, now: float, content: ContentSpec | None = None) -> list[tuple[int, object]]:
        """One control decision; returns (bot_id, message) pairs in send order."""
        content = content or self.content
        self.content = content
        reg = self.registry
        acousto = reg.ids("acousto")
        if self.assignment is None:
            if any(reg[i].smooth is None for i in acousto):
                return []
            self._assign(content)
        stations = self.stations(content)
        self._update_velocity(stations, now)
        movers = sorted(self.assignment)

        fresh = {}
        for i in stations:
            ok = not reg.stale(i, now, self.tol.stale_after)
            if self._stale_flag.get(i, False) == ok:
                self._diag(now, f"bot {i} pose {'fresh again' if ok else 'stale: commands withheld'}")
            self._stale_flag[i] = not ok
            fresh[i] = ok

        cmds = []
        hold = lambda: [(i, self._move(i, stations[i], now)) for i in movers if fresh[i]]  # noqa: E731
        lost = any(fresh[i] and self._error(i, stations[i]) > self.tol.lost_distance for i in movers)

        if self.phase is Phase.APPROACHING:
            cmds += hold()
            if all(fresh[i] for i in movers) and all(self._aligned(i, stations[i]) for i in movers):
                self._transition(Phase.ALIGNING, now)
                cmds += self._hinge_cmds(movers, now)
        elif self.phase is Phase.ALIGNING:
            if lost:
                self._transition(Phase.APPROACHING, now)
                return cmds + hold()
            cmds += hold()
            cmds += self._hinge_cmds(movers, now)
            hinge_ok = all(reg[i].hinge_angle == content.hinge_angle for i in movers)
            if hinge_ok and all(fresh[i] and self._aligned(i, stations[i]) for i in movers):
                if content.modality == "levitation":
                    self._transition(Phase.VISUALIZING, now)
                    side = {i: j for i, j in self.assignment.items()}
                    self._plan = levitation_orchestrate(
                        reg, content.trap, self.dispenser_id, content.axis, content.separation, self.mount, self.tol, side
                    )
                    self._cursor = 0
                    cmds += self._run_schedule(now, stations, fresh)
                else:
                    self._transition(Phase.FOLLOWING, now)
                    self.streaming = True
        elif self.phase is Phase.FOLLOWING:
            if lost:
                self._transition(Phase.APPROACHING, now)
            cmds += hold()
        else:
            if lost:
                self._transition(Phase.APPROACHING, now)
                return cmds + hold()
            if not self.complete:
                cmds += hold()
                cmds += self._run_schedule(now, stations, fresh)
        return cmds

    def _hinge_cmds(self, movers, now):
        out = []
        want = self.content.hinge_angle
        for i in movers:
            if self.registry[i].hinge_angle == want:
                continue
            pend = self._hinge.get(i)
            if pend is not None and not pend.done and now - pend.sent_at < self.tol.ack_timeout - 1e-9:
                continue
            if pend is not None and pend.acked and not pend.done:
                continue  # hinge is moving; DONE will follow
            out.append((i, SetHinge.from_degrees(want)))
        return out

    def _run_schedule(self, now, stations, fresh):
        cmds = []
        plan = self._plan
        while self._cursor < len(plan.steps):
            step = plan.steps[self._cursor]
            act = step.action
            if act == "verify":
                if not all(self._aligned(i, stations[i]) for i in plan.pair):
                    self._transition(Phase.APPROACHING, now)
                    return cmds
            elif act == "stream":
                self.streaming = True
            elif act == "move_dispenser":
                d = plan.dispenser
                if not fresh.get(d, False):
                    return cmds
                st = stations[d]
                cmds.append((d, self._move(d, st, now)))
                if self._aligned(d, st, self.tol.dispenser_pos_tol, self.tol.dispenser_yaw_tol_deg):
                    if self._disp_since is None:
                        self._disp_since = now
                    if now - self._disp_since < self.tol.settle_time - 1e-9:
                        return cmds
                else:
                    self._disp_since = None
                    return cmds
            elif act == "dispense":
                cmds.append((plan.dispenser, Dispense(1)))
                self._dispense = _Pending(-1, now)
            elif act == "classify":
                if not self.bead_outcomes:
                    d = self._dispense
                    if not d.acked and now - d.sent_at >= self.tol.dispense_retry - 1e-9:
                        self._diag(now, "dispense unacknowledged, re-sending")
                        cmds.append((plan.dispenser, Dispense(1)))
                        self._dispense = _Pending(-1, now)
                    return cmds
            elif act == "report":
                self.outcome = self.bead_outcomes[0]
                self.complete = True
                self.streaming = False
                cmds += [(i, Stop()) for i in self.registry.ids()]
            self.schedule_log.append((round(now, 6), act))
            self._cursor += 1
        return cmds

    # ---- frames ----------------------------------------------------------------------------

    def frames(self, now: float, content: ContentSpec | None = None) -> list[tuple[int, object]]:
        content = content or self.content
        if not self.streaming or self.phase in (Phase.APPROACHING, Phase.ALIGNING):
            return []
        boards = {}
        for i in sorted(self.assignment):
            rec = self.registry[i]
            if rec.smooth is None or self.registry.stale(i, now, self.tol.stale_after):
                continue
            boards[i] = board_for(rec.smooth, rec.hinge_angle, self.mount, self.medium)
        if content.modality == "levitation" and len(boards) != 2:
            return []
        try:
            frames = compute_frames(
                boards, content, now, self.medium, int(round(now * 1000)) % 65536, self.assignment
            )
        except SolverError as exc:
            self._diag(now, f"frame solve failed: {exc}")
            return []
        return sorted(frames.items())

    # ---- reactor entry point ---------------------------------------------------------------------

    def step(self, now: float, targets=None, control: bool = True, frames: bool = True) -> list[tuple[int, bytes]]:
        """Ingest queued datagrams, then run control and/or frame work for this tick."""
        self._ingest(now)
        content = self.content if targets is None else self.content.with_targets(targets)
        self.content = content
        msgs = []
        if control:
            msgs += self.phase_step(now, content)
        if frames:
            msgs += self.frames(now, content)
        out = []
        for bot_id, msg in msgs:
            seq = self._tx.next(bot_id)
            if isinstance(msg, SetHinge):
                self._hinge[bot_id] = _Pending(seq, now)
            elif isinstance(msg, Dispense) and self._dispense is not None and self._dispense.seq == -1:
                self._dispense.seq = seq
            self.registry[bot_id].last_cmd_seq = seq
            name = type(msg).__name__
            self.sent[name] = self.sent.get(name, 0) + 1
            out.append((bot_id, encode(msg, bot_id, seq)))
        return out
