"""Episode execution for both subsystems, navigation metrics and seeded sweeps."""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geometry import DISTORT_MODES, distort_dims, perturb_box
from .planner import ExecuteSkill, MoveTo, PlannerState, ScriptedPlanner, Stop, TopologyView
from .scene import Episode, Scene, id_key, shortest_path, shortest_path_length
from .skills import SkillError, SkillParams, project_to_viewpoint, skill_target
from .topograph import (
    TopoGraph,
    edge_precision,
    inject_false_positives,
    matching_score,
    record_step,
    truncate,
)

logger = logging.getLogger(__name__)

DEFAULT_RHO_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_PHI_GRID = (0.05, 0.2, 0.4, 0.6, 0.8, 1.0)
MODES = ("slow", "fast")


@dataclass(frozen=True)
class DegradationConfig:
    rho_ret: float = 1.0
    phi_iou: float = 1.0
    false_positive_rate: float = 0.0
    distort_mode: Optional[str] = None
    distort_probability: float = 0.0
    lam: float = 0.5
    master_seed: int = 0
    success_threshold: float = 3.0
    max_steps: int = 20
    delta_safe: float = 0.3
    delta_pass: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.rho_ret <= 1.0:
            raise ValueError(f"rho_ret must lie in [0, 1], got {self.rho_ret}")
        if not 0.0 < self.phi_iou <= 1.0:
            raise ValueError(f"phi_iou must lie in (0, 1], got {self.phi_iou}")
        if not 0.0 <= self.false_positive_rate <= 1.0:
            raise ValueError(f"false_positive_rate must lie in [0, 1], got {self.false_positive_rate}")
        if self.distort_mode is not None and self.distort_mode not in DISTORT_MODES:
            raise ValueError(f"distort_mode must be one of {DISTORT_MODES}, got {self.distort_mode!r}")
        if not 0.0 <= self.distort_probability <= 1.0:
            raise ValueError("distort_probability must lie in [0, 1]")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.success_threshold < 0 or self.max_steps < 1:
            raise ValueError("success_threshold must be >= 0 and max_steps >= 1")

    @property
    def skill_params(self) -> SkillParams:
        return SkillParams(self.delta_safe, self.delta_pass)

    def grid_value(self, mode: str) -> float:
        return self.rho_ret if mode == "slow" else self.phi_iou


@dataclass(frozen=True)
class EpisodeOutcome:
    scene_id: str
    episode_id: str
    success: bool
    oracle_success: bool
    path_length: float
    shortest_length: float
    final_distance: float
    min_distance: float
    steps: int
    trajectory: Tuple[str, ...]
    s_match: float = math.nan
    s_obj: float = math.nan
    s_edge: float = math.nan
    precision: float = math.nan
    edge_precision: float = math.nan
    failure_reason: str = ""
    failure_skill: str = ""
    graphs: Optional[Tuple[TopoGraph, TopoGraph]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MetricsReport:
    sr: float
    osr: float
    spl: float
    n_episodes: int


def _finish(scene: Scene, episode: Episode, trajectory: List[str], threshold: float,
            failure_reason: str = "", **extra) -> EpisodeOutcome:
    final = trajectory[-1]
    dists = [scene.distance(v, episode.goal) for v in trajectory]
    walked = sum(scene.edge_length(a, b) for a, b in zip(trajectory, trajectory[1:]))
    return EpisodeOutcome(
        scene_id=scene.id,
        episode_id=episode.id,
        success=not failure_reason and dists[-1] <= threshold,
        oracle_success=min(dists) <= threshold,
        path_length=float(walked),
        shortest_length=shortest_path_length(scene, episode.start, episode.goal),
        final_distance=float(dists[-1]),
        min_distance=float(min(dists)),
        steps=len(trajectory) - 1,
        trajectory=tuple(trajectory),
        failure_reason=failure_reason,
        **extra,
    )


def _streams(seed: int, n: int) -> List[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def run_slow_episode(scene: Scene, episode: Episode, config: DegradationConfig,
                     planner=None, seed: int = 0, keep_graphs: bool = False) -> EpisodeOutcome:
    """Navigate on a degraded graph and score it against the ideal one.

    At every visited viewpoint the agent takes one frame of its own
    viewpoint and one towards each neighbour; each frame is a time node.
    """
    planner = planner or ScriptedPlanner(config.max_steps)
    (fp_rng,) = _streams(seed, 1)
    degraded = ideal = TopoGraph()
    t = 0
    state = PlannerState.initial(episode.start)
    trajectory = [episode.start]
    failure = ""
    stop_reason = ""
    while True:
        here = state.viewpoint
        frames = {}
        for facing in (here,) + tuple(sorted(scene.neighbors(here), key=id_key)):
            names = scene.observed_names(facing)
            kept = truncate(names, config.rho_ret)
            if config.false_positive_rate:
                kept = inject_false_positives(kept, scene.vocabulary, config.false_positive_rate, fp_rng,
                                              true_names=names)
            ideal = record_step(ideal, t, names)
            degraded = record_step(degraded, t, kept)
            frames[facing] = t
            t += 1
        if state.step_count >= config.max_steps:
            failure = "max steps"
            break
        decision = planner.next_action(state, degraded, episode, TopologyView.at(scene, here, frames))
        anchor = here if decision.progress_index > state.progress_index else state.anchor
        action = decision.action
        if isinstance(action, Stop):
            stop_reason = action.reason
            if action.reason == "max steps":
                failure = "max steps"
            break
        if isinstance(action, ExecuteSkill):
            box = scene.objects[action.object_id].box
            try:
                point = skill_target(action.skill, scene.position(here), box, config.skill_params)
            except SkillError as exc:
                failure = exc.reason
                break
            dest = project_to_viewpoint(point, {v: vp.position for v, vp in scene.viewpoints.items()})
            _, seg = shortest_path(scene, here, dest)
            hops = seg[1:]
        else:
            hops = [action.viewpoint]
        trajectory.extend(hops)
        state = PlannerState(
            viewpoint=trajectory[-1],
            progress_index=decision.progress_index,
            visited=state.visited | set(hops),
            step_count=state.step_count + 1,
            anchor=anchor,
        )

    if degraded.is_empty() and not failure:
        # nothing was perceived, so wherever the agent stands is not a navigation result
        failure = "zero recall"
    try:
        report = matching_score(degraded, ideal, config.lam)
        scores = dict(s_match=report.s_match, s_obj=report.s_obj, s_edge=report.s_edge,
                      precision=report.precision, edge_precision=edge_precision(degraded, ideal))
    except ValueError:
        scores = {}
    if keep_graphs:
        scores["graphs"] = (degraded, ideal)
    logger.debug("%s rho=%s stop=%r failure=%r", episode.id, config.rho_ret, stop_reason, failure)
    return _finish(scene, episode, trajectory, config.success_threshold, failure, **scores)


def run_fast_episode(scene: Scene, episode: Episode, config: DegradationConfig,
                     seed: int = 0) -> EpisodeOutcome:
    """Execute the episode's skill plan on drifted (and optionally distorted) boxes."""
    if not episode.skill_plan:
        raise ValueError(f"episode {episode.id} has an empty skill plan")
    drift_rng, distort_rng = _streams(seed, 2)
    candidates = {v: vp.position for v, vp in scene.viewpoints.items()}
    here = episode.start
    trajectory = [here]
    failure = skill_failed = ""
    for skill, object_id in episode.skill_plan:
        box = perturb_box(scene.objects[object_id].box, config.phi_iou, drift_rng)
        if config.distort_mode is not None:
            box = distort_dims(box, config.distort_mode, distort_rng, config.distort_probability)
        try:
            point = skill_target(skill, scene.position(here), box, config.skill_params)
        except SkillError as exc:
            failure, skill_failed = exc.reason, skill
            break
        dest = project_to_viewpoint(point, candidates)
        _, seg = shortest_path(scene, here, dest)
        trajectory.extend(seg[1:])
        here = dest
    if not failure and scene.distance(here, episode.goal) > config.success_threshold:
        # ended away from the goal: blame the last skill whose target missed its gt viewpoint
        skill_failed = _first_miss(episode, trajectory)
    return _finish(scene, episode, trajectory, config.success_threshold, failure, failure_skill=skill_failed)


def _first_miss(episode: Episode, trajectory: Sequence[str]) -> str:
    visited = set(trajectory)
    for (skill, _), vid in zip(episode.skill_plan, episode.gt_path[1:]):
        if vid not in visited:
            return skill
    return ""


def compute_metrics(outcomes: Sequence[EpisodeOutcome], success_threshold: Optional[float] = None) -> MetricsReport:
    """SR, OSR and SPL in percent.

    With ``success_threshold`` set, success flags are recomputed from the
    stored final and minimum goal distances.
    """
    if not outcomes:
        raise ValueError("no outcomes to aggregate")
    succ, oracle, spl = [], [], []
    for o in outcomes:
        if success_threshold is None:
            s, os_ = o.success, o.oracle_success
        else:
            s = not o.failure_reason and o.final_distance <= success_threshold
            os_ = o.min_distance <= success_threshold
        succ.append(float(s))
        oracle.append(float(os_))
        denom = max(o.path_length, o.shortest_length)
        spl.append(float(s) * (o.shortest_length / denom if denom > 0 else 1.0))
    return MetricsReport(100.0 * np.mean(succ), 100.0 * np.mean(oracle), 100.0 * np.mean(spl), len(outcomes))


# ------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepRecord:
    mode: str
    grid_index: int
    grid_value: float
    seed: int
    outcome: EpisodeOutcome

    @property
    def sort_key(self):
        return (self.grid_index, id_key(self.outcome.scene_id), id_key(self.outcome.episode_id))


def episode_seed(master_seed: int, episode_id: str, grid_index: int) -> int:
    """Stable 64-bit seed; independent of execution order and of Python's hash salt."""
    digest = hashlib.blake2b(f"{master_seed}|{episode_id}|{grid_index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def slow_grid(rhos: Sequence[float] = DEFAULT_RHO_GRID, **kwargs) -> List[DegradationConfig]:
    return [DegradationConfig(rho_ret=r, **kwargs) for r in rhos]


def fast_grid(phis: Sequence[float] = DEFAULT_PHI_GRID, **kwargs) -> List[DegradationConfig]:
    return [DegradationConfig(phi_iou=p, **kwargs) for p in phis]


_WORKER_SCENES: Sequence[Scene] = ()


def _init_worker(scenes):
    global _WORKER_SCENES
    _WORKER_SCENES = scenes


def _error_outcome(scene: Scene, episode: Episode, exc: Exception) -> EpisodeOutcome:
    return _finish(scene, episode, [episode.start], 0.0, f"error: {type(exc).__name__}: {exc}")


def _run_task(task, scenes=None):
    si, ei, gi, mode, config, planner, seed, keep_graphs = task
    scene = (scenes if scenes is not None else _WORKER_SCENES)[si]
    episode = scene.episodes[ei]
    try:
        if mode == "slow":
            p = planner.for_scene(scene) if hasattr(planner, "for_scene") else planner
            outcome = run_slow_episode(scene, episode, config, p, seed, keep_graphs=keep_graphs)
        else:
            outcome = run_fast_episode(scene, episode, config, seed)
    except Exception as exc:  # a single broken episode must not abort the sweep
        logger.exception("episode %s failed", episode.id)
        outcome = _error_outcome(scene, episode, exc)
    return SweepRecord(mode, gi, config.grid_value(mode), seed, outcome)


def run_sweep(scenes: Sequence[Scene], grid: Sequence[DegradationConfig], mode: str,
              planner=None, master_seed: int = 0, jobs: int = 1,
              keep_graphs: bool = False) -> List[SweepRecord]:
    """Run every (episode, grid point) pair; output sorted by grid index, scene, episode."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not grid:
        raise ValueError("empty degradation grid")
    planner = planner or ScriptedPlanner(grid[0].max_steps)
    tasks = []
    for gi, config in enumerate(grid):
        for si, scene in enumerate(scenes):
            for ei, episode in enumerate(scene.episodes):
                seed = episode_seed(master_seed, episode.id, gi)
                tasks.append((si, ei, gi, mode, config, planner, seed, keep_graphs))
    if jobs <= 1:
        records = [_run_task(task, scenes) for task in tasks]
    elif getattr(planner, "prefers_threads", False):
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(lambda task: _run_task(task, scenes), tasks))
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(tuple(scenes),)) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return sorted(records, key=lambda r: r.sort_key)
