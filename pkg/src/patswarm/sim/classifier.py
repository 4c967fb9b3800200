"""Bead-capture classifier fitted to the reported dispense trials."""

from __future__ import annotations

from dataclasses import dataclass

DZ_LIMIT_CM = 0.43
DPSI_LIMIT_DEG = 1.05

# (drop error dZ cm, dispenser yaw error dpsi deg, levitated?) for the ten trials
DISPENSE_TRIALS = (
    (0.46, -0.11, False),
    (0.36, 0.14, True),
    (0.26, -0.19, True),
    (0.16, 0.32, True),
    (0.06, 1.10, False),
    (-0.04, 3.01, False),
    (-0.14, 0.37, True),
    (-0.24, 0.21, True),
    (-0.41, 0.12, True),
    (-0.51, 0.10, False),
)


@dataclass(frozen=True)
class ClassifierConfig:
    dz_limit_cm: float = DZ_LIMIT_CM
    dpsi_limit_deg: float = DPSI_LIMIT_DEG


def levitation_classifier(dz_cm: float, dpsi_deg: float, config: ClassifierConfig = ClassifierConfig()) -> bool:
    return abs(dz_cm) <= config.dz_limit_cm and abs(dpsi_deg) <= config.dpsi_limit_deg
