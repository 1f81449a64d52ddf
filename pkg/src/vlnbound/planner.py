"""High-level planners acting on the degraded topological graph.

The scripted planner is a deterministic landmark follower.  ``LLMPlanner``
speaks a chat-completion HTTP protocol and is optional.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field, replace
from typing import FrozenSet, Mapping, Optional, Tuple, Union

import numpy as np

from .scene import Episode, Scene, id_key
from .topograph import TopoGraph

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 20


@dataclass(frozen=True)
class MoveTo:
    viewpoint: str


@dataclass(frozen=True)
class ExecuteSkill:
    skill: str
    object_id: str


@dataclass(frozen=True)
class Stop:
    reason: str = ""


Action = Union[MoveTo, ExecuteSkill, Stop]


@dataclass(frozen=True)
class PlannerState:
    viewpoint: str
    progress_index: int = 0
    visited: FrozenSet[str] = frozenset()
    step_count: int = 0
    anchor: Optional[str] = None  # viewpoint where progress last advanced

    @classmethod
    def initial(cls, start: str) -> "PlannerState":
        return cls(viewpoint=start, visited=frozenset({start}), anchor=start)


@dataclass(frozen=True)
class PlannerDecision:
    action: Action
    progress_index: int


@dataclass(frozen=True)
class TopologyView:
    """What the planner may know besides the degraded graph: where it is,
    where it can go, and which time node of this step looked at which
    viewpoint."""

    viewpoint: str
    neighbors: Tuple[str, ...]
    positions: Mapping[str, Tuple[float, float, float]]
    frames: Mapping[str, int]

    @classmethod
    def at(cls, scene: Scene, viewpoint: str, frames: Mapping[str, int]) -> "TopologyView":
        nbrs = tuple(sorted(scene.neighbors(viewpoint), key=id_key))
        positions = {v: scene.viewpoints[v].position for v in (viewpoint,) + nbrs}
        return cls(viewpoint, nbrs, positions, dict(frames))


def _names_in_frame(graph: TopoGraph, view: TopologyView, viewpoint: str) -> FrozenSet[str]:
    t = view.frames.get(viewpoint)
    return graph.names_at(t) if t is not None else frozenset()


def scripted_next_action(state: PlannerState, graph: TopoGraph, episode: Episode,
                         view: TopologyView, max_steps: int = DEFAULT_MAX_STEPS) -> PlannerDecision:
    """Follow the landmark list through the degraded graph.

    Arriving where the next landmark is seen advances progress; a landmark
    seen towards an unvisited neighbour pulls the agent there; otherwise
    the nearest unvisited neighbour is explored.
    """
    progress = state.progress_index
    if state.step_count >= max_steps:
        return PlannerDecision(Stop("max steps"), progress)
    if graph.is_empty():
        return PlannerDecision(Stop("empty graph"), progress)

    landmarks = episode.landmarks
    if (progress < len(landmarks) and state.viewpoint != state.anchor
            and landmarks[progress] in _names_in_frame(graph, view, state.viewpoint)):
        progress += 1
    if progress >= len(landmarks):
        return PlannerDecision(Stop("instruction complete"), progress)

    unvisited = [n for n in view.neighbors if n not in state.visited]
    target = landmarks[progress]
    seen = [n for n in unvisited if target in _names_in_frame(graph, view, n)]
    if seen:
        return PlannerDecision(MoveTo(seen[0]), progress)
    if not unvisited:
        return PlannerDecision(Stop("nothing left to explore"), progress)
    here = np.asarray(view.positions[view.viewpoint])
    nearest = min(unvisited, key=lambda n: (float(np.linalg.norm(np.asarray(view.positions[n]) - here)), id_key(n)))
    return PlannerDecision(MoveTo(nearest), progress)


@dataclass(frozen=True)
class ScriptedPlanner:
    max_steps: int = DEFAULT_MAX_STEPS

    def next_action(self, state, graph, episode, view) -> PlannerDecision:
        return scripted_next_action(state, graph, episode, view, self.max_steps)


# ------------------------------------------------------------- LLM adapter

SYSTEM_PROMPT = (
    "You are the high-level planner of a navigation agent. You receive the "
    "instruction, a time-indexed list of observed objects and the viewpoints "
    "you can move to. Reply with exactly one action: MOVE <viewpoint> or STOP."
)

_ACTION_RE = re.compile(r"\b(MOVE)\s+([A-Za-z0-9_\-]+)|\b(STOP)\b|\b(SKILL)\s+(approach|through)\s+([A-Za-z0-9_\-]+)",
                        re.IGNORECASE)


def serialize_prompt(graph: TopoGraph, episode: Episode, state: PlannerState,
                     view: Optional[TopologyView] = None, candidates=None) -> str:
    facing = {t: vid for vid, t in view.frames.items()} if view is not None else {}
    lines = [f"instruction: {episode.instruction}"]
    if episode.landmarks:
        done = ", ".join(episode.landmarks[: state.progress_index]) or "none"
        lines.append(f"landmarks reached: {done}")
    lines.append("observations:")
    for t in graph.time_nodes:
        names = ", ".join(sorted(graph.names_at(t)))
        suffix = f" (view {facing[t]})" if t in facing else ""
        lines.append(f"step {t}: {names}{suffix}")
    if candidates is None:
        candidates = view.neighbors if view is not None else ()
    lines.append(f"current: {state.viewpoint}")
    lines.append("candidates: " + ", ".join(sorted(candidates, key=id_key)))
    lines.append("answer with MOVE <candidate> or STOP")
    return "\n".join(lines)


def parse_decision(text: str, current: str, scene: Scene) -> Action:
    """Extract a single action from a model reply; anything invalid is a Stop."""
    matches = _ACTION_RE.findall(text or "")
    if len(matches) != 1:
        logger.warning("unparseable planner reply (%d action tokens): %r", len(matches), text)
        return Stop("unparseable reply")
    move, target, stop, skill, skill_name, obj = matches[0]
    if stop:
        return Stop("planner stop")
    if skill:
        if obj not in scene.objects:
            logger.warning("planner named unknown object %r", obj)
            return Stop("unknown object")
        return ExecuteSkill(skill_name.lower(), obj)
    if target not in scene.neighbors(current):
        logger.warning("planner chose %r which is not adjacent to %r", target, current)
        return Stop("non-adjacent move")
    return MoveTo(target)


class RateLimiter:
    """Minimum spacing between requests, shared across threads."""

    def __init__(self, max_per_second: Optional[float]):
        self.interval = 1.0 / max_per_second if max_per_second else 0.0
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next - now
            self._next = max(now, self._next) + self.interval
        if delay > 0:
            time.sleep(delay)


@dataclass
class LLMPlanner:
    """Planner backed by an OpenAI-style ``/chat/completions`` endpoint."""

    base_url: str
    model: str = "gpt-4o"
    scene: Optional[Scene] = None
    token_env: str = "VLNBOUND_LLM_TOKEN"
    timeout: float = 30.0
    max_steps: int = DEFAULT_MAX_STEPS
    max_requests_per_second: Optional[float] = None
    session: object = None
    prefers_threads: bool = field(default=True, init=False)

    def __post_init__(self):
        self._limiter = RateLimiter(self.max_requests_per_second)
        if self.session is None:
            import requests
            self.session = requests.Session()

    def build_request(self, prompt: str) -> Tuple[str, dict, dict]:
        url = self.base_url.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": prompt},
            ],
        }
        return url, headers, body

    def complete(self, prompt: str) -> str:
        url, headers, body = self.build_request(prompt)
        self._limiter.wait()
        response = self.session.post(url, json=body, headers=headers, timeout=self.timeout)
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]

    def next_action(self, state, graph, episode, view) -> PlannerDecision:
        if state.step_count >= self.max_steps:
            return PlannerDecision(Stop("max steps"), state.progress_index)
        if self.scene is None:
            raise ValueError("LLMPlanner needs the scene to validate replies")
        prompt = serialize_prompt(graph, episode, state, view)
        try:
            reply = self.complete(prompt)
        except Exception as exc:  # network failures must not abort a sweep
            logger.warning("planner request failed: %s", exc)
            return PlannerDecision(Stop("request failed"), state.progress_index)
        return PlannerDecision(parse_decision(reply, state.viewpoint, self.scene), state.progress_index)

    def for_scene(self, scene: Scene) -> "LLMPlanner":
        clone = replace(self, scene=scene)
        clone._limiter = self._limiter
        return clone
