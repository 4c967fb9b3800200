from .classifier import DISPENSE_TRIALS, ClassifierConfig, levitation_classifier
from .network import Datagram, NetConfig, SimNetwork, net_delay, net_deliver
from .scenario import (
    RosterEntry,
    ScenarioReport,
    ScenarioSpec,
    SimConfig,
    Simulation,
    TargetTrack,
    load_scenario,
    run_scenario,
    scenario_from_document,
)
from .world import BotAgent, Bead, LevitationGeometry, World, tracker_sample, world_step

__all__ = [
    "DISPENSE_TRIALS",
    "Bead",
    "BotAgent",
    "ClassifierConfig",
    "Datagram",
    "LevitationGeometry",
    "NetConfig",
    "RosterEntry",
    "ScenarioReport",
    "ScenarioSpec",
    "SimConfig",
    "SimNetwork",
    "Simulation",
    "TargetTrack",
    "World",
    "levitation_classifier",
    "load_scenario",
    "net_delay",
    "net_deliver",
    "run_scenario",
    "scenario_from_document",
    "tracker_sample",
    "world_step",
]
