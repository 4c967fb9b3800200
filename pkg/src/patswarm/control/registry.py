"""Server-side view of the swarm: who is connected and where the tracker last saw them."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..acoustics.array import wrap_angle
from ..errors import RosterError
from ..protocol import PoseReport

KINDS = ("acousto", "dispenser")


@dataclass
class BotRecord:
    bot_id: int
    kind: str
    pose: tuple | None = None  # latest report (x, y, z, yaw)
    smooth: tuple | None = None  # low-passed (x, y, yaw) used for alignment decisions
    pose_time: float = -math.inf
    hinge_angle: int = 0
    last_cmd_seq: int | None = None
    last_seen: float = -math.inf

    @property
    def xy_yaw(self):
        return None if self.pose is None else (self.pose[0], self.pose[1], self.pose[3])


class Registry:
    """Bot records keyed by id, fed by PoseReports in arrival order.

    ``smoothing`` is the gain of the exponential filter applied to reported
    poses; 1.0 disables filtering.
    """

    def __init__(self, roster: dict, smoothing: float = 0.3):
        if not 0 < smoothing <= 1:
            raise ValueError("smoothing gain must lie in (0, 1]")
        self.smoothing = smoothing
        self.bots: dict[int, BotRecord] = {}
        for bot_id, kind in roster.items():
            if kind not in KINDS:
                raise RosterError(f"bot {bot_id}: unknown kind {kind!r}")
            self.bots[int(bot_id)] = BotRecord(int(bot_id), kind)

    def __getitem__(self, bot_id) -> BotRecord:
        return self.bots[bot_id]

    def __contains__(self, bot_id):
        return bot_id in self.bots

    def ids(self, kind: str | None = None) -> list[int]:
        return sorted(i for i, r in self.bots.items() if kind is None or r.kind == kind)

    def update_pose(self, report: PoseReport, now: float) -> bool:
        """Apply a report; older-than-current timestamps are ignored."""
        rec = self.bots.get(report.source_id)
        if rec is None:
            return False
        t = report.time_s
        if t < rec.pose_time:
            return False
        x, y, z = report.position_m
        yaw = report.yaw_rad
        rec.pose = (x, y, z, yaw)
        rec.pose_time = t
        rec.last_seen = now
        if rec.smooth is None:
            rec.smooth = (x, y, yaw)
        else:
            g = self.smoothing
            sx, sy, syaw = rec.smooth
            rec.smooth = (sx + g * (x - sx), sy + g * (y - sy), wrap_angle(syaw + g * wrap_angle(yaw - syaw)))
        return True

    def stale(self, bot_id: int, now: float, bound: float) -> bool:
        return now - self.bots[bot_id].pose_time > bound + 1e-9
