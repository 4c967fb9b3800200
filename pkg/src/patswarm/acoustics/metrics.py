"""Field metrics on line profiles, plus the modulation envelope."""

from __future__ import annotations

import math

import numpy as np

from ..errors import GeometryError
from .field import LineProfile

NODE_THRESHOLD = 0.10


def find_nodes(profile: LineProfile, medium=None, threshold: float = NODE_THRESHOLD) -> list[float]:
    """Positions (m from profile start) of pressure nodes.

    A node is a local minimum below ``threshold`` x profile max whose neighbours
    are higher. The sub-sample position comes from a parabola through the
    squared magnitudes, which is locally quadratic at a true zero.
    """
    p = profile.samples
    peak = p.max()
    if peak <= 0:
        return []
    q = p * p
    h = profile.spacing
    nodes = []
    n = p.size
    i = 1
    while i < n - 1:
        if p[i] < p[i - 1] and p[i] < threshold * peak:
            # walk across a flat bottom
            j = i
            while j + 1 < n and p[j + 1] == p[i]:
                j += 1
            if j + 1 < n and p[j + 1] > p[i]:
                if j == i:
                    denom = q[i - 1] - 2 * q[i] + q[i + 1]
                    off = 0.5 * (q[i - 1] - q[i + 1]) / denom if denom > 0 else 0.0
                    nodes.append((i + float(np.clip(off, -0.5, 0.5))) * h)
                else:
                    nodes.append(0.5 * (i + j) * h)
            i = j + 1
        else:
            i += 1
    return nodes


def fwhm(profile: LineProfile) -> float:
    """Width between half-maximum crossings around the global maximum (linear interpolation)."""
    p = profile.samples
    k = int(np.argmax(p))
    if k == 0 or k == p.size - 1:
        raise GeometryError("profile maximum lies on an endpoint")
    half = p[k] / 2.0
    h = profile.spacing

    left = None
    for i in range(k, 0, -1):
        if p[i - 1] <= half:
            left = (i - 1) + (half - p[i - 1]) / (p[i] - p[i - 1])
            break
    right = None
    for i in range(k, p.size - 1):
        if p[i + 1] <= half:
            right = i + (p[i] - half) / (p[i] - p[i + 1])
            break
    if left is None or right is None:
        side = "left" if left is None else "right"
        raise GeometryError(f"half maximum never crossed on the {side}: profile is truncated")
    return (right - left) * h


def am_envelope(mod_frequency: float, depth: float, t) -> float:
    """Sinusoidal amplitude envelope with peak 1 and trough 1 - depth."""
    if mod_frequency < 0:
        raise GeometryError("modulation frequency must be non-negative")
    if not 0.0 <= depth <= 1.0:
        raise GeometryError("modulation depth must lie in [0, 1]")
    s = np.sin(2.0 * math.pi * mod_frequency * np.asarray(t, dtype=float))
    env = 1.0 - depth * (1.0 - s) / 2.0
    return float(env) if np.ndim(env) == 0 else env
