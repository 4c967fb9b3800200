from .planning import (
    MODALITY_HINGE,
    ContentSpec,
    LevitationPlan,
    ScheduleStep,
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
from .registry import BotRecord, Registry
from .server import SERVER, BeadOutcome, Phase, SwarmServer

__all__ = [
    "MODALITY_HINGE",
    "SERVER",
    "BeadOutcome",
    "BotRecord",
    "ContentSpec",
    "LevitationPlan",
    "Phase",
    "Registry",
    "ScheduleStep",
    "Station",
    "SwarmServer",
    "Tolerances",
    "alignment_check",
    "assign_targets",
    "audio_station",
    "board_for",
    "compute_frames",
    "haptic_station",
    "levitation_orchestrate",
    "levitation_stations",
]
