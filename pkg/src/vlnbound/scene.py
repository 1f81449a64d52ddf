"""Environment model: viewpoint graph, objects, observation sequences, episodes.

Also holds the scene file reader/writer, the validator and a deterministic
synthetic generator used in place of real house scans.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .geometry import OrientedBox, calibrate_offset, yaw_rotation

APPROACH = "approach"
THROUGH = "through"
SKILLS = (APPROACH, THROUGH)

DOOR_NAMES = ("door", "archway", "doorway")
LANDMARK_NAMES = ("table", "chair", "sofa", "bed", "plant", "lamp", "cabinet")
CLUTTER_NAMES = ("picture", "rug", "pillow", "book", "vase", "towel", "shelf", "box", "bin", "curtain")
# typical (width, depth, height) in meters; sizes are jittered around these
CLUTTER_SIZES = {
    "picture": (0.6, 0.05, 0.5),
    "rug": (2.0, 1.4, 0.02),
    "pillow": (0.5, 0.4, 0.15),
    "book": (0.25, 0.18, 0.04),
    "vase": (0.2, 0.2, 0.35),
    "towel": (0.5, 0.1, 0.7),
    "shelf": (1.0, 0.35, 1.8),
    "box": (0.5, 0.4, 0.4),
    "bin": (0.35, 0.35, 0.5),
    "curtain": (1.6, 0.1, 2.2),
}
# interleaved so truncated vocabularies keep a mix of roles
DEFAULT_VOCABULARY = (
    "door", "table", "chair", "sofa", "picture", "archway", "bed", "rug", "plant", "pillow",
    "lamp", "book", "doorway", "vase", "cabinet", "towel", "shelf", "box", "bin", "curtain",
)

SCHEMA_KEYS = ("vocabulary", "viewpoints", "edges", "objects", "observations", "episodes")


class SceneFormatError(ValueError):
    """A scene file could not be parsed into a Scene."""


def id_key(identifier: str):
    """Natural sort key, so that ``v2`` sorts before ``v10``."""
    return tuple(int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", identifier))


@dataclass(frozen=True)
class Viewpoint:
    id: str
    position: Tuple[float, float, float]
    neighbors: Tuple[str, ...] = ()

    @property
    def pos(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)


@dataclass(frozen=True)
class SceneObject:
    id: str
    name: str
    box: OrientedBox


@dataclass(frozen=True)
class ObservationSequence:
    viewpoint_id: str
    object_ids: Tuple[str, ...]

    def __len__(self) -> int:
        return len(self.object_ids)


@dataclass(frozen=True)
class Episode:
    id: str
    instruction: str
    landmarks: Tuple[str, ...]
    start: str
    goal: str
    gt_path: Tuple[str, ...]
    skill_plan: Tuple[Tuple[str, str], ...]


@dataclass(frozen=True)
class Scene:
    id: str
    vocabulary: Tuple[str, ...]
    viewpoints: Mapping[str, Viewpoint]
    objects: Mapping[str, SceneObject]
    observations: Mapping[str, ObservationSequence]
    episodes: Tuple[Episode, ...]

    def position(self, viewpoint_id: str) -> np.ndarray:
        return self.viewpoints[viewpoint_id].pos

    def neighbors(self, viewpoint_id: str) -> Tuple[str, ...]:
        return self.viewpoints[viewpoint_id].neighbors

    def edge_length(self, a: str, b: str) -> float:
        return float(np.linalg.norm(self.position(a) - self.position(b)))

    def distance(self, a: str, b: str) -> float:
        return self.edge_length(a, b)

    def episode(self, episode_id: str) -> Episode:
        for ep in self.episodes:
            if ep.id == episode_id:
                return ep
        raise KeyError(episode_id)

    def observed_names(self, viewpoint_id: str) -> List[str]:
        return [self.objects[oid].name for oid in self.observations[viewpoint_id].object_ids]

    def min_spacing(self) -> float:
        ids = sorted(self.viewpoints, key=id_key)
        return min(self.edge_length(a, b) for a, b in itertools.combinations(ids, 2))


@dataclass(frozen=True)
class Violation:
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: {self.message}"


# --------------------------------------------------------------------- I/O


def scene_to_dict(scene: Scene) -> dict:
    viewpoints = sorted(scene.viewpoints.values(), key=lambda v: id_key(v.id))
    return {
        "id": scene.id,
        "vocabulary": list(scene.vocabulary),
        "viewpoints": [{"id": v.id, "position": list(v.position)} for v in viewpoints],
        "edges": [[v.id, n] for v in viewpoints for n in v.neighbors],
        "objects": [
            {"id": o.id, "name": o.name, **o.box.to_dict()}
            for o in sorted(scene.objects.values(), key=lambda o: id_key(o.id))
        ],
        "observations": [
            {"viewpoint": vid, "objects": list(scene.observations[vid].object_ids)}
            for vid in sorted(scene.observations, key=id_key)
        ],
        "episodes": [
            {
                "id": ep.id,
                "instruction": ep.instruction,
                "landmarks": list(ep.landmarks),
                "start": ep.start,
                "goal": ep.goal,
                "gt_path": list(ep.gt_path),
                "skill_plan": [[skill, target] for skill, target in ep.skill_plan],
            }
            for ep in scene.episodes
        ],
    }


def dumps_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=1) + "\n"


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(dumps_scene(scene))


def scene_from_dict(data: dict, default_id: str = "scene") -> Scene:
    if not isinstance(data, dict):
        raise SceneFormatError("top level: expected a JSON object")
    missing = [k for k in SCHEMA_KEYS if k not in data]
    if missing:
        raise SceneFormatError(f"top level: missing keys {missing}")
    try:
        vocabulary = tuple(str(n) for n in data["vocabulary"])
        adjacency: Dict[str, List[str]] = {}
        positions = {}
        for i, v in enumerate(data["viewpoints"]):
            vid = str(v["id"])
            if vid in positions:
                raise SceneFormatError(f"viewpoints[{i}]: duplicate viewpoint id {vid!r}")
            pos = tuple(float(x) for x in v["position"])
            if len(pos) != 3:
                raise SceneFormatError(f"viewpoints[{i}]: position must have 3 components")
            positions[vid] = pos
            adjacency[vid] = []
        for i, edge in enumerate(data["edges"]):
            if len(edge) != 2:
                raise SceneFormatError(f"edges[{i}]: expected [from, to]")
            a, b = str(edge[0]), str(edge[1])
            adjacency.setdefault(a, [])
            if b not in adjacency[a]:
                adjacency[a].append(b)
        viewpoints = {
            vid: Viewpoint(vid, positions[vid], tuple(sorted(adjacency[vid], key=id_key)))
            for vid in positions
        }
        # edges may start at unknown viewpoints; keep them visible to the validator
        for vid, nbrs in adjacency.items():
            if vid not in viewpoints:
                viewpoints[vid] = Viewpoint(vid, (math.nan, math.nan, math.nan), tuple(nbrs))
        objects = {}
        for i, o in enumerate(data["objects"]):
            oid = str(o["id"])
            if oid in objects:
                raise SceneFormatError(f"objects[{i}]: duplicate object id {oid!r}")
            try:
                box = OrientedBox.from_dict(o)
            except ValueError as exc:
                raise SceneFormatError(f"objects[{i}] ({oid}): {exc}") from exc
            objects[oid] = SceneObject(oid, str(o["name"]), box)
        observations = {}
        for i, obs in enumerate(data["observations"]):
            vid = str(obs["viewpoint"])
            observations[vid] = ObservationSequence(vid, tuple(str(x) for x in obs["objects"]))
        episodes = []
        for i, ep in enumerate(data["episodes"]):
            plan = []
            for j, step in enumerate(ep["skill_plan"]):
                if len(step) != 2:
                    raise SceneFormatError(f"episodes[{i}].skill_plan[{j}]: expected [skill, target]")
                plan.append((str(step[0]), str(step[1])))
            episodes.append(Episode(
                id=str(ep["id"]),
                instruction=str(ep["instruction"]),
                landmarks=tuple(str(x) for x in ep["landmarks"]),
                start=str(ep["start"]),
                goal=str(ep["goal"]),
                gt_path=tuple(str(x) for x in ep["gt_path"]),
                skill_plan=tuple(plan),
            ))
    except SceneFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneFormatError(f"malformed scene: {exc!r}") from exc
    return Scene(
        id=str(data.get("id", default_id)),
        vocabulary=vocabulary,
        viewpoints=viewpoints,
        objects=objects,
        observations=observations,
        episodes=tuple(episodes),
    )


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return scene_from_dict(data, default_id=path.stem)


# ---------------------------------------------------------------- validation


def validate_scene(scene: Scene) -> List[Violation]:
    out: List[Violation] = []
    vps = scene.viewpoints
    vocab = set(scene.vocabulary)

    for vid in sorted(vps, key=id_key):
        vp = vps[vid]
        loc = f"viewpoints[{vid}]"
        if not all(math.isfinite(x) for x in vp.position):
            out.append(Violation(loc, "non-finite or missing position"))
        for n in vp.neighbors:
            if n == vid:
                out.append(Violation(loc, "self-loop"))
            elif n not in vps:
                out.append(Violation(loc, f"dangling viewpoint id {n!r} in edges"))
            elif vid not in vps[n].neighbors:
                out.append(Violation(f"edges[{vid}->{n}]", "asymmetric adjacency"))

    if vps and not _connected(scene):
        out.append(Violation("edges", "viewpoint graph is not connected"))

    for oid in sorted(scene.objects, key=id_key):
        obj = scene.objects[oid]
        if not obj.name:
            out.append(Violation(f"objects[{oid}]", "empty name"))
        elif obj.name not in vocab:
            out.append(Violation(f"objects[{oid}]", f"name {obj.name!r} not in vocabulary"))

    mentioned = {name for ep in scene.episodes for name in ep.landmarks}
    for vid in sorted(vps, key=id_key):
        if vid not in scene.observations:
            out.append(Violation(f"observations[{vid}]", "missing observation sequence"))
    for vid in sorted(scene.observations, key=id_key):
        seq = scene.observations[vid]
        loc = f"observations[{vid}]"
        if vid not in vps:
            out.append(Violation(loc, f"dangling viewpoint id {vid!r}"))
        if len(set(seq.object_ids)) != len(seq.object_ids):
            out.append(Violation(loc, "duplicate object id in sequence"))
        dangling = [oid for oid in seq.object_ids if oid not in scene.objects]
        for oid in dangling:
            out.append(Violation(loc, f"dangling object id {oid!r}"))
        if not dangling:
            ranks = [scene.objects[oid].name not in mentioned for oid in seq.object_ids]
            if ranks != sorted(ranks):
                out.append(Violation(loc, "instruction-mentioned objects are not ordered first"))

    for ep in scene.episodes:
        loc = f"episodes[{ep.id}]"
        for label, vid in (("start", ep.start), ("goal", ep.goal)):
            if vid not in vps:
                out.append(Violation(loc, f"dangling viewpoint id {vid!r} in {label}"))
        if not ep.gt_path or ep.gt_path[0] != ep.start or ep.gt_path[-1] != ep.goal:
            out.append(Violation(loc, "gt_path must run from start to goal"))
        for a, b in zip(ep.gt_path, ep.gt_path[1:]):
            if a not in vps or b not in vps:
                out.append(Violation(loc, f"dangling viewpoint id in gt_path step {a}->{b}"))
            elif b not in vps[a].neighbors:
                out.append(Violation(loc, f"gt_path step {a}->{b} is not an edge"))
        for name in ep.landmarks:
            if name not in vocab:
                out.append(Violation(loc, f"landmark {name!r} not in vocabulary"))
        for skill, target in ep.skill_plan:
            if skill not in SKILLS:
                out.append(Violation(loc, f"unknown skill {skill!r}"))
            if target not in scene.objects:
                out.append(Violation(loc, f"dangling object id {target!r} in skill_plan"))
    return out


def _connected(scene: Scene) -> bool:
    ids = [v for v in scene.viewpoints]
    seen = {ids[0]}
    stack = [ids[0]]
    while stack:
        cur = stack.pop()
        for n in scene.viewpoints[cur].neighbors:
            if n in scene.viewpoints and n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(ids)


# ------------------------------------------------------------- shortest path


def shortest_path(scene: Scene, source: str, target: str) -> Tuple[float, List[str]]:
    """Dijkstra with Euclidean edge weights.  Returns ``(math.inf, [])`` when
    ``target`` cannot be reached."""
    for vid in (source, target):
        if vid not in scene.viewpoints:
            raise KeyError(f"unknown viewpoint id {vid!r}")
    dist = {source: 0.0}
    prev: Dict[str, str] = {}
    heap = [(0.0, id_key(source), source)]
    done = set()
    while heap:
        d, _, cur = heapq.heappop(heap)
        if cur in done:
            continue
        if cur == target:
            path = [cur]
            while path[-1] != source:
                path.append(prev[path[-1]])
            return d, path[::-1]
        done.add(cur)
        for n in scene.viewpoints[cur].neighbors:
            if n not in scene.viewpoints:
                continue
            nd = d + scene.edge_length(cur, n)
            if nd < dist.get(n, math.inf):
                dist[n] = nd
                prev[n] = cur
                heapq.heappush(heap, (nd, id_key(n), n))
    return math.inf, []


def shortest_path_length(scene: Scene, source: str, target: str) -> float:
    """Length in meters of the shortest path; ``math.inf`` if unreachable."""
    return shortest_path(scene, source, target)[0]


def path_length(scene: Scene, path: Sequence[str]) -> float:
    return float(sum(scene.edge_length(a, b) for a, b in zip(path, path[1:])))


# ---------------------------------------------------------------- generator


@dataclass(frozen=True)
class SceneParams:
    """Knobs of the synthetic generator.

    ``placements`` maps a viewpoint index to explicit object names and
    replaces random object placement entirely.
    """

    grid: Tuple[int, int] = (4, 4)
    spacing: float = 2.0
    objects_per_viewpoint: int = 10
    vocab_size: int = 20
    vocabulary: Optional[Tuple[str, ...]] = None
    n_episodes: int = 15
    door_fraction: float = 0.35
    min_goal_distance: float = 3.0
    phi_min: float = 0.05
    delta_safe: float = 0.3
    delta_pass: float = 0.5
    placements: Optional[Mapping[int, Sequence[str]]] = None

    def resolved_vocabulary(self) -> Tuple[str, ...]:
        if self.vocabulary is not None:
            return tuple(self.vocabulary)
        base = list(DEFAULT_VOCABULARY[: self.vocab_size])
        base += [f"object{i}" for i in range(len(base), self.vocab_size)]
        return tuple(base)

    def check(self) -> None:
        nx, ny = self.grid
        if nx < 1 or ny < 1 or nx * ny < 2:
            raise ValueError(f"grid must contain at least 2 viewpoints, got {nx}x{ny}")
        if self.placements is None and (nx < 2 or ny < 2):
            raise ValueError(f"random scenes need a grid of at least 2x2, got {nx}x{ny}")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        vocab = self.resolved_vocabulary()
        if len(vocab) < 1 or (self.vocabulary is None and self.vocab_size < 2):
            raise ValueError("vocabulary must contain at least 2 names")
        if self.placements is None and self.objects_per_viewpoint < 1:
            raise ValueError("objects_per_viewpoint must be at least 1")
        if self.n_episodes < 1:
            raise ValueError("n_episodes must be at least 1")
        if not 0.0 < self.phi_min <= 1.0:
            raise ValueError("phi_min must lie in (0, 1]")
        if self.placements is not None:
            for idx, names in self.placements.items():
                if not 0 <= int(idx) < nx * ny:
                    raise ValueError(f"placement index {idx} outside the grid")
                for name in names:
                    if name not in vocab:
                        raise ValueError(f"placement name {name!r} not in vocabulary")


@dataclass
class _Key:
    object_id: str
    skill: str
    entry_from: frozenset  # neighbours from which the skill lands on this viewpoint


def _sign_patterns() -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=3)))


def _lands_on(box: OrientedBox, skill: str, agent: np.ndarray, home: str,
              ids: Sequence[str], positions: np.ndarray, params: SceneParams) -> bool:
    """True if the skill target projects onto ``home`` for every drift sign
    pattern at ``params.phi_min`` and without drift."""
    from .skills import SkillError, SkillParams, project_to_viewpoint, skill_target

    sp = SkillParams(params.delta_safe, params.delta_pass)
    candidates = [box]
    for signs in _sign_patterns():
        pert = calibrate_offset(box, params.phi_min, signs)
        candidates.append(box.translated(pert.delta))
    for cand in candidates:
        try:
            target = skill_target(skill, agent, cand, sp)
        except SkillError:
            return False
        if project_to_viewpoint(target, list(zip(ids, positions))) != home:
            return False
    return True


def _door_box(rng: np.random.Generator, position: np.ndarray, normal_axis: int) -> OrientedBox:
    width = rng.uniform(0.8, 1.2)
    thickness = rng.uniform(0.05, 0.15)
    height = rng.uniform(1.9, 2.2)
    # exact permutation matrices keep axis-aligned incidence exactly zero when dims swap
    rotation = np.eye(3) if normal_axis == 1 else np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    center = position + np.array([0.0, 0.0, height / 2])
    return OrientedBox(center, (width, thickness, height), rotation)


def _landmark_box(rng: np.random.Generator, position: np.ndarray, scale: float = 1.0) -> OrientedBox:
    size = np.array([rng.uniform(0.3, 0.4), rng.uniform(0.3, 0.4), rng.uniform(0.4, 0.8)]) * scale
    center = position + np.array([0.0, 0.0, size[2] / 2])
    return OrientedBox(center, size, yaw_rotation(rng.uniform(0, 2 * math.pi)))


def _clutter_box(rng: np.random.Generator, position: np.ndarray, spacing: float, name: str) -> OrientedBox:
    if name in CLUTTER_SIZES:
        size = np.asarray(CLUTTER_SIZES[name]) * rng.uniform(0.8, 1.25, size=3)
    else:
        size = rng.uniform(0.1, 1.5, size=3)
    reach = 0.45 * spacing
    offset = np.array([rng.uniform(-reach, reach), rng.uniform(-reach, reach), size[2] / 2])
    return OrientedBox(position + offset, size, yaw_rotation(rng.uniform(0, 2 * math.pi)))


def _instruction(plan: Sequence[Tuple[str, str]], names: Sequence[str]) -> str:
    parts = []
    for i, ((skill, _), name) in enumerate(zip(plan, names)):
        if skill == THROUGH:
            parts.append(f"go through the {name}")
        elif i == len(plan) - 1:
            parts.append(f"walk to the {name}")
        else:
            parts.append(f"pass the {name}")
    return ", then ".join(parts)


def generate_scene(params: SceneParams = SceneParams(), seed: int = 0,
                   scene_id: Optional[str] = None) -> Scene:
    """Build a grid scene whose episodes are solvable under ideal perception.

    Every viewpoint on an episode path (after the start) carries exactly one
    key object that its instruction names.  Key objects are shaped so that
    the skill target, even under the worst drift sign at ``phi_min``, still
    projects onto that viewpoint.
    """
    params.check()
    rng = np.random.default_rng(seed)
    scene_id = scene_id or f"scene{seed}"
    vocab = params.resolved_vocabulary()
    door_names = [n for n in vocab if n in DOOR_NAMES]
    landmark_names = [n for n in vocab if n in LANDMARK_NAMES or n.startswith("object")]
    clutter_names = [n for n in vocab if n not in door_names and n not in landmark_names]
    if not landmark_names:
        landmark_names = [n for n in vocab if n not in door_names] or list(vocab)
    if not clutter_names:
        clutter_names = [n for n in vocab if n not in door_names] or list(vocab)

    nx, ny = params.grid
    ids = [f"v{j * nx + i}" for j in range(ny) for i in range(nx)]
    positions = np.array([(i * params.spacing, j * params.spacing, 0.0) for j in range(ny) for i in range(nx)])
    adjacency: Dict[str, List[str]] = {vid: [] for vid in ids}
    for j in range(ny):
        for i in range(nx):
            k = j * nx + i
            if i + 1 < nx:
                adjacency[ids[k]].append(ids[k + 1])
                adjacency[ids[k + 1]].append(ids[k])
            if j + 1 < ny:
                adjacency[ids[k]].append(ids[k + nx])
                adjacency[ids[k + nx]].append(ids[k])
    viewpoints = {
        vid: Viewpoint(vid, tuple(float(x) for x in positions[k]), tuple(sorted(adjacency[vid], key=id_key)))
        for k, vid in enumerate(ids)
    }

    objects: Dict[str, SceneObject] = {}
    homes: Dict[str, List[str]] = {vid: [] for vid in ids}
    keys: Dict[str, _Key] = {}
    counter = itertools.count()

    def add(name: str, box: OrientedBox, vid: str) -> str:
        oid = f"o{next(counter)}"
        objects[oid] = SceneObject(oid, name, box)
        homes[vid].append(oid)
        return oid

    def entry_dirs(vid: str, box: OrientedBox, skill: str, normal_axis: Optional[int]) -> frozenset:
        k = ids.index(vid)
        ok = set()
        for n in viewpoints[vid].neighbors:
            diff = positions[k] - positions[ids.index(n)]
            if normal_axis is not None and abs(diff[normal_axis]) < 1e-12:
                continue
            if _lands_on(box, skill, positions[ids.index(n)], vid, ids, positions, params):
                ok.add(n)
        return frozenset(ok)

    for k, vid in enumerate(ids):
        pos = positions[k]
        if params.placements is not None:
            for name in params.placements.get(k, ()):
                is_door = name in DOOR_NAMES
                normal_axis = (0 if ny == 1 else 1) if is_door else None
                box = _door_box(rng, pos, normal_axis) if is_door else _landmark_box(rng, pos)
                oid = add(name, box, vid)
                if vid not in keys and (is_door or name not in clutter_names or name in LANDMARK_NAMES):
                    skill = THROUGH if is_door else APPROACH
                    keys[vid] = _Key(oid, skill, entry_dirs(vid, box, skill, normal_axis))
            continue

        if door_names and rng.random() < params.door_fraction:
            normal_axis = int(rng.integers(0, 2))
            box = _door_box(rng, pos, normal_axis)
            name = door_names[int(rng.integers(len(door_names)))]
            skill = THROUGH
        else:
            normal_axis = None
            name = landmark_names[int(rng.integers(len(landmark_names)))]
            skill = APPROACH
            box = _landmark_box(rng, pos)
            scale = 1.0
            while not entry_dirs(vid, box, skill, None) and scale > 0.2:
                scale *= 0.8
                box = _landmark_box(rng, pos, scale)
        oid = add(name, box, vid)
        keys[vid] = _Key(oid, skill, entry_dirs(vid, box, skill, normal_axis))
        for _ in range(params.objects_per_viewpoint - 1):
            cname = clutter_names[int(rng.integers(len(clutter_names)))]
            add(cname, _clutter_box(rng, pos, params.spacing, cname), vid)

    episodes = _generate_episodes(params, rng, scene_id, ids, positions, viewpoints, keys, objects)

    mentioned = {name for ep in episodes for name in ep.landmarks}

    def rank(oid: str):
        obj = objects[oid]
        return (obj.name not in mentioned, -obj.box.volume, id_key(oid))

    observations = {vid: ObservationSequence(vid, tuple(sorted(homes[vid], key=rank))) for vid in ids}
    return Scene(scene_id, vocab, viewpoints, objects, observations, tuple(episodes))


def _generate_episodes(params, rng, scene_id, ids, positions, viewpoints, keys, objects) -> List[Episode]:
    import networkx as nx

    graph = nx.Graph()
    for vid, vp in viewpoints.items():
        for n in vp.neighbors:
            graph.add_edge(vid, n, weight=float(np.linalg.norm(positions[ids.index(vid)] - positions[ids.index(n)])))

    def usable(path: Sequence[str]) -> bool:
        for prev, cur in zip(path, path[1:]):
            key = keys.get(cur)
            if key is None or prev not in key.entry_from:
                return False
        return True

    pairs = []
    for a, b in itertools.permutations(ids, 2):
        if np.linalg.norm(positions[ids.index(a)] - positions[ids.index(b)]) <= params.min_goal_distance:
            continue
        paths = sorted(
            (p for p in nx.all_shortest_paths(graph, a, b, weight="weight") if usable(p)),
            key=lambda p: [id_key(x) for x in p],
        )
        if paths:
            pairs.append((a, b, paths))
    if not pairs:
        raise ValueError("scene admits no solvable episode; enlarge the grid or add key objects")

    order = rng.permutation(len(pairs))
    chosen = [pairs[i] for i in order[: params.n_episodes]]
    while len(chosen) < params.n_episodes:
        chosen.append(pairs[int(rng.integers(len(pairs)))])

    episodes = []
    for idx, (a, b, paths) in enumerate(chosen):
        path = paths[int(rng.integers(len(paths)))]
        plan = tuple((keys[v].skill, keys[v].object_id) for v in path[1:])
        names = tuple(objects[oid].name for _, oid in plan)
        episodes.append(Episode(
            id=f"{scene_id}-e{idx:02d}",
            instruction=_instruction(plan, names),
            landmarks=names,
            start=a,
            goal=b,
            gt_path=tuple(path),
            skill_plan=plan,
        ))
    return episodes


def default_scene_set(seed: int = 0, n_scenes: int = 4, params: SceneParams = SceneParams()) -> List[Scene]:
    """Four default 4x4 scenes with 15 episodes each (60 episodes)."""
    return [generate_scene(params, seed=seed + i, scene_id=f"scene{seed + i}") for i in range(n_scenes)]
