"""Scenario documents, the end-to-end simulation loop and its report."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources

import numpy as np

from ..acoustics import DriveState, Medium, field_at, field_at_points
from ..acoustics.array import wrap_angle
from ..config import Document, Section
from ..control import ContentSpec, Phase, SwarmServer, Tolerances, board_for
from ..control.server import SERVER
from ..errors import ConfigError, GeometryError, RosterError
from ..robot import ControllerConfig, DiffDriveParams, DiffDriveState, MountGeometry
from .classifier import ClassifierConfig
from .network import NetConfig, SimNetwork
from .world import BotAgent, LevitationGeometry, World

KIND_MODALITY = {"s1_haptics": "haptic", "s2_audio": "audio", "s3_levitation": "levitation"}
BUILTIN = {"s1": "s1_haptics", "s2": "s2_audio", "s3": "s3_levitation"}


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    duration: float = 30.0
    seed: int = 0
    latency_ms: float = 0.0
    jitter_ms: float = 0.0
    loss: float = 0.0
    tracker_sigma_pos: float = 0.0  # m, per axis
    tracker_sigma_yaw_deg: float = 0.0
    bounds: tuple = (-1.0, 1.0, -1.0, 1.0)
    hinge_noise_scale: float = 0.0
    tracker_hz: float = 100.0
    control_hz: float = 50.0
    frame_hz: float = 200.0
    pose_filter_gain: float = 0.3
    server_smoothing: float = 0.3
    bead_fall_speed: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not 0.0 <= self.loss <= 1.0:
            raise ValueError("loss must lie in [0, 1]")
        xmin, xmax, ymin, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("bounds must be (xmin, xmax, ymin, ymax) with min < max")

    def net(self) -> NetConfig:
        return NetConfig(self.latency_ms / 1000.0, self.jitter_ms / 1000.0, self.loss)

    def period(self, hz: float) -> int:
        """Ticks between events at ``hz``; at least one tick."""
        return max(1, int(round(1.0 / (hz * self.dt))))


@dataclass(frozen=True)
class TargetTrack:
    name: str
    waypoints: tuple  # ((t, x, y, z), ...), t strictly increasing

    def at(self, t: float) -> tuple:
        w = np.asarray(self.waypoints, dtype=float)
        return tuple(float(np.interp(t, w[:, 0], w[:, k])) for k in (1, 2, 3))


@dataclass(frozen=True)
class RosterEntry:
    bot_id: int
    kind: str
    x: float
    y: float
    yaw: float  # rad


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    kind: str
    roster: tuple
    tracks: tuple
    content: ContentSpec
    tolerances: Tolerances = Tolerances()
    controllers: dict = field(default_factory=dict)
    sim: SimConfig = SimConfig()
    override: dict = field(default_factory=dict)
    max_follow_error: float = 0.02
    hopper: int = 20
    source: str = ""  # the document text this spec came from

    @property
    def modality(self) -> str:
        return KIND_MODALITY[self.kind]

    def targets_at(self, t: float) -> list:
        return [tr.at(t) for tr in self.tracks]

    def controller(self, kind: str) -> ControllerConfig:
        return self.controllers.get(kind, ControllerConfig())

    def validate_roster(self):
        kinds = [e.kind for e in self.roster]
        ids = [e.bot_id for e in self.roster]
        if len(set(ids)) != len(ids):
            raise RosterError("bot ids must be unique")
        n_acousto = kinds.count("acousto")
        if self.kind == "s3_levitation":
            if n_acousto != 2 or kinds.count("dispenser") < 1:
                raise RosterError(f"{self.kind} needs 2 acousto bots and 1 dispenser, roster has {n_acousto} and {kinds.count('dispenser')}")
        else:
            need = len(self.tracks) if self.kind == "s1_haptics" else len(self.content.azimuths)
            if n_acousto < max(1, need):
                raise RosterError(f"{self.kind} needs at least {max(1, need)} acousto bots, roster has {n_acousto}")


# ---- loading ------------------------------------------------------------------------


def _controller(sec: Section) -> ControllerConfig:
    base = ControllerConfig()
    kw = {}
    for f in fields(ControllerConfig):
        if sec.has(f.name):
            lo = -math.inf if f.name == "yaw_deadband" else 0.0
            kw[f.name] = sec.number(f.name, lo=lo)
    sec.finish()
    if "yaw_deadband" in kw:
        kw["yaw_deadband"] = math.radians(kw["yaw_deadband"])
    return replace(base, **kw)


def scenario_from_document(doc: Document) -> ScenarioSpec:
    root = doc.root()
    kind = root.string("kind", choices=tuple(KIND_MODALITY))
    name = root.string("name", kind)

    s = root.section("sim")
    d = SimConfig()
    try:
        sim = SimConfig(
            dt=s.number("dt", d.dt, lo=1e-6),
            duration=s.number("duration", d.duration, lo=1e-6),
            seed=s.integer("seed", d.seed, lo=0, hi=2**64 - 1),
            latency_ms=s.number("latency_ms", d.latency_ms, lo=0),
            jitter_ms=s.number("jitter_ms", d.jitter_ms, lo=0),
            loss=s.number("loss", d.loss, lo=0, hi=1),
            tracker_sigma_pos=s.number("tracker_sigma_pos", d.tracker_sigma_pos, lo=0),
            tracker_sigma_yaw_deg=s.number("tracker_sigma_yaw_deg", d.tracker_sigma_yaw_deg, lo=0),
            bounds=s.vector("bounds", 4, d.bounds),
            hinge_noise_scale=s.number("hinge_noise_scale", d.hinge_noise_scale, lo=0),
            tracker_hz=s.number("tracker_hz", d.tracker_hz, lo=1e-3),
            control_hz=s.number("control_hz", d.control_hz, lo=1e-3),
            frame_hz=s.number("frame_hz", d.frame_hz, lo=1e-3),
            pose_filter_gain=s.number("pose_filter_gain", d.pose_filter_gain, lo=1e-6, hi=1),
            server_smoothing=s.number("server_smoothing", d.server_smoothing, lo=1e-6, hi=1),
            bead_fall_speed=s.number("bead_fall_speed", d.bead_fall_speed, lo=1e-6),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise doc.error(str(exc), "sim") from None
    s.finish()

    roster = []
    for k, item in enumerate(root.items("roster")):
        e = root.child(item, f"roster[{k}]")
        x, y, yaw = e.vector("pose", 3)
        roster.append(RosterEntry(e.integer("id", lo=0, hi=255), e.string("kind", choices=("acousto", "dispenser")), x, y, math.radians(yaw)))
        e.finish()

    tracks = []
    for k, item in enumerate(root.items("targets")):
        e = root.child(item, f"targets[{k}]")
        wps = e.items("waypoints")
        if not wps or not all(isinstance(w, list) and len(w) == 4 for w in wps):
            raise doc.error(f"targets[{k}].waypoints must be a non-empty list of [t, x, y, z]", "waypoints")
        wps = tuple(tuple(float(c) for c in w) for w in wps)
        if any(b[0] <= a[0] for a, b in zip(wps, wps[1:])):
            raise doc.error(f"targets[{k}].waypoints times must increase", "waypoints")
        tracks.append(TargetTrack(e.string("name", f"target{k}"), wps))
        e.finish()
    if not tracks:
        raise doc.error("at least one target is required", "targets")

    c = root.section("content")
    try:
        content = ContentSpec(
            modality=KIND_MODALITY[kind],
            targets=tuple(tr.at(0.0) for tr in tracks),
            mod_frequency=c.number("mod_frequency", 200.0, lo=0),
            depth=c.number("depth", 1.0, lo=0, hi=1),
            axis=math.radians(c.number("axis_deg", 0.0)),
            separation=c.number("separation", 0.10, lo=1e-6),
            azimuths=tuple(math.radians(float(a)) for a in c.items("azimuths_deg", [])),
            bounds=sim.bounds,
            solver_iterations=c.integer("solver_iterations", 5, lo=1, hi=1000),
        )
    except GeometryError as exc:
        raise doc.error(str(exc), "content" if root.has("content") else "targets") from None
    c.finish()
    if kind == "s2_audio" and not content.azimuths:
        raise doc.error("s2_audio needs content.azimuths_deg", "content")

    t = root.section("tolerances")
    td = Tolerances()
    tol = Tolerances(**{f.name: t.number(f.name, getattr(td, f.name), lo=0) for f in fields(Tolerances)})
    t.finish()

    ctl = root.section("controller")
    controllers = {k: _controller(ctl.section(k)) for k in ("acousto", "dispenser") if ctl.has(k)}
    ctl.finish()

    v = root.section("verdict")
    max_follow = v.number("max_follow_error", 0.02, lo=0)
    v.finish()

    o = root.section("override")
    override = {k: o.number(k) for k in ("dz_cm", "dpsi_deg") if o.has(k)}
    o.finish()

    hopper = root.integer("hopper", 20, lo=0, hi=10_000)
    root.finish()
    return ScenarioSpec(name, kind, tuple(roster), tuple(tracks), content, tol, controllers, sim, override, max_follow, hopper, doc.text)


def builtin_scenario_text(name: str) -> str:
    key = BUILTIN.get(name, name)
    return resources.files("patswarm").joinpath(f"data/{key}.json").read_text()


def load_scenario(path) -> ScenarioSpec:
    """Read a scenario document; bare names s1/s2/s3 resolve to the shipped ones."""
    p = str(path)
    if p in BUILTIN or p in BUILTIN.values():
        return scenario_from_document(Document(builtin_scenario_text(p), f"<builtin {p}>"))
    return scenario_from_document(Document.load(path))


# ---- report ---------------------------------------------------------------------------


def _r(x, nd=9):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return round(float(x), nd)


@dataclass
class ScenarioReport:
    summary: dict
    rows: list  # (t, bot_id, err_pos, err_yaw, p_at_target)

    @property
    def success(self) -> bool:
        return bool(self.summary["verdict"]["success"])

    def to_json(self) -> str:
        return json.dumps(self.summary, sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "bot_id", "err_pos", "err_yaw", "p_at_target"])
            for t, i, e, y, p in self.rows:
                w.writerow([repr(round(t, 9)), i, repr(_r(e)), repr(_r(y)), repr(_r(p, 6))])


# ---- simulation -----------------------------------------------------------------------------


class Simulation:
    """World + server + network for one scenario, stepped in lockstep ticks."""

    def __init__(self, spec: ScenarioSpec, config: SimConfig | None = None, medium: Medium = Medium()):
        self.spec = spec
        self.cfg = cfg = config or spec.sim
        spec.validate_roster()
        self.medium = medium
        self.mount = MountGeometry()
        self.params = DiffDriveParams()
        self.rng = np.random.default_rng(cfg.seed)
        self.net = SimNetwork(cfg.net(), self.rng)
        bots = {
            e.bot_id: BotAgent(
                e.bot_id, e.kind, DiffDriveState(e.x, e.y, e.yaw), self.params, spec.controller(e.kind),
                filter_gain=cfg.pose_filter_gain, hopper=spec.hopper,
            )
            for e in sorted(spec.roster, key=lambda e: e.bot_id)
        }
        lev = None
        if spec.modality == "levitation":
            c = spec.content
            lev = LevitationGeometry(np.asarray(c.trap), c.axis, wrap_angle(c.axis + math.pi / 2))
        self.world = World(
            bots, self.params, self.mount, cfg.bounds, lev, ClassifierConfig(), dict(spec.override),
            cfg.bead_fall_speed, cfg.hinge_noise_scale, cfg.tracker_sigma_pos, cfg.tracker_sigma_yaw_deg,
        )
        try:
            self.world.validate()
        except ValueError as exc:
            raise RosterError(str(exc)) from None
        self.server = SwarmServer(
            {e.bot_id: e.kind for e in spec.roster}, spec.content, spec.tolerances, medium, self.mount,
            cfg.bounds, cfg.server_smoothing,
        )
        self.periods = {k: cfg.period(getattr(cfg, f"{k}_hz")) for k in ("control", "frame", "tracker")}
        self.tick = 0
        self.rows: list = []
        self._follow = {"ticks": 0, "max_err": 0.0, "max_yaw": 0.0, "p": [], "entry_err": None, "moving_max_err": 0.0}
        self._visual_p: list = []

    @property
    def now(self) -> float:
        return self.tick * self.cfg.dt

    def _route(self, datagrams):
        for d in datagrams:
            if d.dst == SERVER:
                self.server.receive(d.src, d.data)
            else:
                self.world.bots[d.dst].inbox.append((d.src, d.data))

    def step(self):
        t = self.now
        dt = self.cfg.dt
        targets = self.spec.targets_at(t)
        self._route(self.net.deliver(t))
        out = self.server.step(
            t, targets, control=self.tick % self.periods["control"] == 0, frames=self.tick % self.periods["frame"] == 0
        )
        for dst, data in out:
            self.net.send(SERVER, dst, data, t)
        self._route(self.net.deliver(t))
        emit = (self.tick + 1) % self.periods["tracker"] == 0
        for outcome in self.world.step(t, dt, self.net, self.rng, emit):
            self.server.notify_bead(outcome)
        self.tick += 1
        self._record(self.now, targets, self.spec.targets_at(self.now))

    # pressure at the rendered point from the true board poses and applied frames
    def _pressures(self, targets) -> dict:
        srv = self.server
        if srv.assignment is None:
            return {}
        arrays = {}
        for i in sorted(srv.assignment):
            bot = self.world.bots[i]
            if bot.frame is None:
                continue
            d = bot.frame.drive()
            peak = float(d.amplitudes.max())
            if peak <= 0:
                continue
            board = board_for(bot.state, bot.hinge.angle, self.mount, self.medium, bot.hinge.offset_pos, bot.hinge.offset_yaw)
            arrays[i] = (board, DriveState(d.phases, d.amplitudes / peak))
        if not arrays:
            return {}
        mod = self.spec.modality
        if mod == "haptic":
            return {i: abs(field_at([a], targets[srv.assignment[i]], self.medium)) for i, a in arrays.items()}
        if mod == "audio":
            p = abs(field_at(list(arrays.values()), targets[0], self.medium))
            return {i: p for i in arrays}
        c = self.spec.content
        u = np.array([math.cos(c.axis), math.sin(c.axis), 0.0])
        q = self.medium.wavelength / 4
        pts = np.array([np.asarray(targets[0]) + q * u, np.asarray(targets[0]) - q * u])
        p = float(np.abs(field_at_points(list(arrays.values()), pts, self.medium)).max())
        return {i: p for i in arrays}

    def _record(self, t, targets_before, targets):
        srv = self.server
        content = srv.content.with_targets(targets)
        stations = srv.stations(content) if srv.assignment is not None else {}
        press = self._pressures(targets)
        errs = {}
        for i in sorted(self.world.bots):
            s = self.world.bots[i].state
            st = stations.get(i)
            if st is None:
                e = y = None
            else:
                e = math.hypot(s.x - st.x, s.y - st.y)
                y = 0.0 if st.yaw is None else abs(math.degrees(wrap_angle(s.yaw - st.yaw)))
            errs[i] = (e, y)
            self.rows.append((t, i, e, y, press.get(i, 0.0) if self.world.bots[i].kind == "acousto" else None))
        movers = sorted(srv.assignment or ())
        f = self._follow
        if srv.phase is Phase.FOLLOWING:
            me = max(errs[i][0] for i in movers)
            if f["entry_err"] is None:
                f["entry_err"] = me
            f["ticks"] += 1
            f["max_err"] = max(f["max_err"], me)
            f["max_yaw"] = max(f["max_yaw"], max(errs[i][1] for i in movers))
            if any(np.linalg.norm(np.subtract(a, b)) > 1e-12 for a, b in zip(targets_before, targets)):
                f["moving_max_err"] = max(f["moving_max_err"], me)
            f["p"].extend(press.get(i, 0.0) for i in movers)
        elif srv.phase is Phase.VISUALIZING and srv.streaming:
            self._visual_p.extend(press.get(i, 0.0) for i in movers)

    def run(self) -> ScenarioReport:
        n = int(round(self.cfg.duration / self.cfg.dt))
        while self.tick < n:
            self.step()
            if self.server.complete:
                break
        return self.report()

    def report(self) -> ScenarioReport:
        srv, spec, f = self.server, self.spec, self._follow
        reached = next((t for t, _, to in srv.transitions if to == Phase.FOLLOWING.value), None)
        visual = next((t for t, _, to in srv.transitions if to == Phase.VISUALIZING.value), None)
        regressions = sum(1 for _, _, to in srv.transitions if to == Phase.APPROACHING.value)
        beads = [
            {"t_release": _r(b.t_release, 6), "dz_cm": _r(b.dz_cm, 6), "dpsi_deg": _r(b.dpsi_deg, 6),
             "lateral_cm": _r(b.lateral_cm, 6), "status": b.status}
            for b in self.world.beads
        ]
        if spec.modality == "levitation":
            if not srv.complete:
                verdict = (False, "dispense schedule did not complete")
            elif srv.outcome.levitated:
                verdict = (True, "bead levitated")
            else:
                verdict = (False, f"bead not levitated (dZ {srv.outcome.dz_cm:.2f} cm, dpsi {srv.outcome.dpsi_deg:.2f} deg)")
        else:
            if reached is None:
                verdict = (False, "never reached following")
            elif regressions:
                verdict = (False, f"lost target {regressions} time(s)")
            elif f["max_err"] > spec.max_follow_error + 1e-12:
                verdict = (False, f"following error {f['max_err']:.4f} m exceeds {spec.max_follow_error} m")
            else:
                verdict = (True, "followed within tolerance")
        p = f["p"] or self._visual_p
        stale = srv.stale + sum(b.rx.stale for b in self.world.bots.values())
        corrupt = srv.corrupt + sum(b.corrupt for b in self.world.bots.values())
        summary = {
            "scenario": spec.name,
            "kind": spec.kind,
            "seed": self.cfg.seed,
            "dt": self.cfg.dt,
            "t_end": _r(self.now, 6),
            "transitions": [{"t": t, "from": a, "to": b} for t, a, b in srv.transitions],
            "messages": {
                "sent": self.net.sent, "lost": self.net.lost, "delivered": self.net.delivered,
                "in_flight": self.net.in_flight, "stale": stale, "corrupt": corrupt,
                "server_sent_by_type": dict(sorted(srv.sent.items())),
            },
            "following": {
                "reached_at": reached, "entry_error": _r(f["entry_err"]), "max_error": _r(f["max_err"]) if f["ticks"] else None,
                "max_error_moving": _r(f["moving_max_err"]) if f["ticks"] else None,
                "max_yaw_error_deg": _r(f["max_yaw"]) if f["ticks"] else None, "ticks": f["ticks"],
            },
            "visualizing_at": visual,
            "pressure": {
                "min": _r(min(p), 3) if p else None, "mean": _r(float(np.mean(p)), 3) if p else None,
                "max": _r(max(p), 3) if p else None,
            },
            "beads": beads,
            "schedule": [{"t": t, "step": a} for t, a in srv.schedule_log],
            "outcome": None if srv.outcome is None else {
                "levitated": srv.outcome.levitated, "dz_cm": _r(srv.outcome.dz_cm, 6), "dpsi_deg": _r(srv.outcome.dpsi_deg, 6),
            },
            "bots": {
                str(i): {"kind": b.kind, "final": [_r(b.state.x), _r(b.state.y), _r(b.state.yaw)],
                         "hinge_deg": _r(b.hinge.angle, 6) if b.hinge else None}
                for i, b in sorted(self.world.bots.items())
            },
            "collisions": self.world.collisions,
            "diagnostics": [{"t": t, "text": s} for t, s in srv.diagnostics[:200]],
            "diagnostics_total": len(srv.diagnostics),
            "verdict": {"success": verdict[0], "reason": verdict[1]},
        }
        return ScenarioReport(summary, self.rows)


def run_scenario(spec: ScenarioSpec, config: SimConfig | None = None) -> ScenarioReport:
    return Simulation(spec, config).run()
