"""Geometry-aware motion skills that turn a (possibly noisy) box into a
navigation target and snap it onto the viewpoint graph."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Tuple, Union

import numpy as np

from .geometry import OrientedBox

GRAZING_TOL = 1e-9


class SkillError(ValueError):
    """Skill target undefined for the given agent/box configuration."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


def horizontal_half_diagonal(size: np.ndarray) -> float:
    return 0.5 * math.hypot(size[0], size[1])


@dataclass(frozen=True)
class SkillParams:
    delta_safe: float = 0.3
    delta_pass: float = 0.5
    collision_radius: Callable[[np.ndarray], float] = horizontal_half_diagonal

    def __post_init__(self):
        if self.delta_safe < 0 or self.delta_pass < 0:
            raise ValueError("delta_safe and delta_pass must be non-negative")


@dataclass(frozen=True)
class SkillOutcome:
    target_point: np.ndarray
    chosen_viewpoint: str


def _heading(p_agent, box: OrientedBox) -> np.ndarray:
    offset = box.center - np.asarray(p_agent, dtype=float)
    norm = float(np.linalg.norm(offset))
    if norm == 0.0:
        raise SkillError("coincident", "agent position coincides with the box centroid")
    return offset / norm


def approach_target(p_agent, box: OrientedBox, params: SkillParams = SkillParams()) -> np.ndarray:
    """Stop short of the box along the agent-to-centroid ray."""
    u = _heading(p_agent, box)
    return box.center - u * (params.collision_radius(box.size) + params.delta_safe)


def through_target(p_agent, box: OrientedBox, params: SkillParams = SkillParams()) -> np.ndarray:
    """Cross the box along its thinnest axis, on the far side from the agent."""
    u = _heading(p_agent, box)
    j = int(np.argmin(box.size))  # first minimum wins ties
    normal = box.rotation[:, j]
    incidence = float(u @ normal)
    if abs(incidence) <= GRAZING_TOL:
        raise SkillError("grazing incidence",
                         f"heading is parallel to the traversal plane (u.n = {incidence:.3g})")
    return box.center + math.copysign(1.0, incidence) * normal * (0.5 * box.size[j] + params.delta_pass)


def skill_target(skill: str, p_agent, box: OrientedBox, params: SkillParams = SkillParams()) -> np.ndarray:
    if skill == "approach":
        return approach_target(p_agent, box, params)
    if skill == "through":
        return through_target(p_agent, box, params)
    raise ValueError(f"unknown skill {skill!r}")


Candidates = Union[Mapping[str, Sequence[float]], Sequence[Tuple[str, Sequence[float]]]]


def project_to_viewpoint(p_target, viewpoints: Candidates) -> str:
    """Nearest viewpoint to ``p_target``; equal distances go to the lowest id."""
    from .scene import id_key

    items = list(viewpoints.items()) if isinstance(viewpoints, Mapping) else list(viewpoints)
    if not items:
        raise ValueError("no candidate viewpoints")
    items.sort(key=lambda kv: id_key(kv[0]))
    ids = [vid for vid, _ in items]
    pos = np.array([np.asarray(p, dtype=float) for _, p in items])
    dist = np.linalg.norm(pos - np.asarray(p_target, dtype=float), axis=1)
    return ids[int(np.flatnonzero(dist == dist.min())[0])]
