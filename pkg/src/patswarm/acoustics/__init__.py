from .array import (
    CALIBRATION_PRESSURE,
    CALIBRATION_RANGE,
    DriveState,
    Medium,
    PhasedArrayModel,
    Pose,
    TransducerElement,
    build_array,
    calibrated_p0,
    default_board,
    default_element,
    wrap_angle,
)
from .field import (
    FieldGrid,
    GridSpec,
    LineProfile,
    directivity,
    element_response,
    field_at,
    field_at_points,
    line_profile,
    piston_pressure,
    sample_grid,
)
from .metrics import am_envelope, find_nodes, fwhm
from .solvers import MultipointResult, focus_phases, levitation_signature, multipoint_solve, uniformity_residual

__all__ = [
    "CALIBRATION_PRESSURE",
    "CALIBRATION_RANGE",
    "DriveState",
    "FieldGrid",
    "GridSpec",
    "LineProfile",
    "Medium",
    "MultipointResult",
    "PhasedArrayModel",
    "Pose",
    "TransducerElement",
    "am_envelope",
    "build_array",
    "calibrated_p0",
    "default_board",
    "default_element",
    "directivity",
    "element_response",
    "field_at",
    "field_at_points",
    "find_nodes",
    "focus_phases",
    "fwhm",
    "levitation_signature",
    "line_profile",
    "multipoint_solve",
    "piston_pressure",
    "sample_grid",
    "uniformity_residual",
    "wrap_angle",
]
