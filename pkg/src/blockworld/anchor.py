"""Marker-anchored coordinate frames: rigid transform plus uniform scale,
re-calibration on marker re-detection, and location-dependent access gating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .world import WorldState

ORTHO_TOL = 1e-9
DEFAULT_FRESHNESS_MS = 120_000


@dataclass(frozen=True)
class Pose:
    """world_from_marker transform: p_world = scale * R @ p_marker + t."""

    rotation: np.ndarray  # 3x3, orthonormal, det +1
    translation: np.ndarray  # 3
    scale: float

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not np.allclose(r.T @ r, np.eye(3), atol=ORTHO_TOL):
            raise ValueError("rotation is not orthonormal")
        if np.linalg.det(r) < 0:
            raise ValueError("rotation is a reflection (det < 0)")

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3), 1.0)

    def to_params(self) -> list[float]:
        """Wire form: 9 rotation entries row-major, 3 translation, 1 scale."""
        return [*self.rotation.reshape(9).tolist(), *self.translation.tolist(), self.scale]

    @classmethod
    def from_params(cls, params) -> "Pose":
        vals = [float(v) for v in params]
        if len(vals) != 13:
            raise ValueError(f"pose needs 13 numbers, got {len(vals)}")
        return cls(np.array(vals[:9]).reshape(3, 3), np.array(vals[9:12]), vals[12])


@dataclass(frozen=True)
class MarkerObservation:
    marker_id: str
    world_from_marker: Pose
    observed_at: int


def to_marker_frame(pose: Pose, world_point) -> np.ndarray:
    """m = (1/s) * R^T @ (p - t); inverse of from_marker_frame."""
    p = np.asarray(world_point, dtype=float)
    return (pose.rotation.T @ (p - pose.translation)) / pose.scale


def from_marker_frame(pose: Pose, marker_point) -> np.ndarray:
    """p = s * R @ m + t."""
    m = np.asarray(marker_point, dtype=float)
    return pose.scale * (pose.rotation @ m) + pose.translation


def rebase(old: Pose, new: Pose, world_point) -> np.ndarray:
    """Re-calibrate a world point after the marker is re-detected at a new pose.

    Marker-relative coordinates are invariant: content follows the marker.
    """
    return from_marker_frame(new, to_marker_frame(old, world_point))


@dataclass(frozen=True)
class GateDecision:
    allowed: bool
    reason: Optional[str] = None  # "no_observation" | "wrong_marker" | "stale"

    def __bool__(self) -> bool:
        return self.allowed


ALLOWED = GateDecision(True)


def gate_access(
    world: WorldState,
    last_obs: Optional[MarkerObservation],
    now: int,
    freshness_window_ms: int = DEFAULT_FRESHNESS_MS,
) -> GateDecision:
    """Location gate: independent worlds are open; dependent worlds need a
    matching marker observation no older than the freshness window."""
    if world.marker_id is None:
        return ALLOWED
    if last_obs is None:
        return GateDecision(False, "no_observation")
    if last_obs.marker_id != world.marker_id:
        return GateDecision(False, "wrong_marker")
    if now - last_obs.observed_at > freshness_window_ms:
        return GateDecision(False, "stale")
    return ALLOWED
