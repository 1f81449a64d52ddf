"""Temporal-object bipartite graphs, retention truncation and matching scores."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .scene import ObservationSequence

Edge = Tuple[int, str]


@dataclass(frozen=True)
class TopoGraph:
    """Time nodes, object-name nodes and ``(t, name)`` observation edges."""

    time_nodes: Tuple[int, ...] = ()
    object_nodes: FrozenSet[str] = frozenset()
    edges: FrozenSet[Edge] = frozenset()

    def names_at(self, t: int) -> FrozenSet[str]:
        return frozenset(name for step, name in self.edges if step == t)

    def is_empty(self) -> bool:
        return not self.object_nodes


def record_step(graph: TopoGraph, t: int, observed: Iterable[str]) -> TopoGraph:
    if t in graph.time_nodes:
        raise ValueError(f"step {t} already recorded")
    names = frozenset(observed)
    return TopoGraph(
        graph.time_nodes + (t,),
        graph.object_nodes | names,
        graph.edges | {(t, name) for name in names},
    )


def retained_count(rho: float, n: int) -> int:
    """Round ``rho * n`` half away from zero."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"retention ratio must lie in [0, 1], got {rho}")
    # tolerance absorbs products such as 0.1 * 25 = 2.4999999999999996
    return min(n, int(math.floor(rho * n + 0.5 + 1e-9)))


def truncate_observation(sequence: ObservationSequence, rho: float) -> ObservationSequence:
    k = retained_count(rho, len(sequence.object_ids))
    return ObservationSequence(sequence.viewpoint_id, sequence.object_ids[:k])


def truncate(items: Sequence, rho: float) -> list:
    return list(items[: retained_count(rho, len(items))])


def inject_false_positives(observed: Sequence[str], vocabulary: Sequence[str], rate: float,
                           rng: np.random.Generator,
                           true_names: Optional[Iterable[str]] = None) -> List[str]:
    """Append spurious names that are not truly present in the frame.

    ``true_names`` defaults to ``observed``; pass the undegraded frame so
    that spurious names never coincide with missed true objects.  On
    average ``rate`` spurious names are added per distinct observed name,
    the fractional part resolved with one Bernoulli draw.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"false-positive rate must lie in [0, 1], got {rate}")
    out = list(observed)
    if rate == 0.0 or not observed:
        return out
    present = set(observed) | set(true_names if true_names is not None else ())
    pool = [name for name in dict.fromkeys(vocabulary) if name not in present]
    expected = rate * len(set(observed))
    count = int(math.floor(expected))
    if rng.random() < expected - count:
        count += 1
    count = min(count, len(pool))
    if count:
        picks = rng.choice(len(pool), size=count, replace=False)
        out.extend(pool[i] for i in sorted(picks))
    return out


@dataclass(frozen=True)
class MatchReport:
    s_obj: float
    s_edge: float
    s_match: float
    lam: float
    precision: float = 1.0


def matching_score(degraded: TopoGraph, ideal: TopoGraph, lam: float = 0.5) -> MatchReport:
    """Object-name recall and edge recall of ``degraded`` against ``ideal``,
    fused as ``lam * s_obj + (1 - lam) * s_edge``.

    ``precision`` is the share of degraded names that the ideal graph also
    holds; it is 1 when the degraded graph has no names at all.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if not ideal.object_nodes or not ideal.edges:
        raise ValueError("matching score undefined for an ideal graph without objects or edges")
    shared_names = degraded.object_nodes & ideal.object_nodes
    s_obj = len(shared_names) / len(ideal.object_nodes)
    s_edge = len(degraded.edges & ideal.edges) / len(ideal.edges)
    precision = len(shared_names) / len(degraded.object_nodes) if degraded.object_nodes else 1.0
    return MatchReport(s_obj, s_edge, lam * s_obj + (1.0 - lam) * s_edge, lam, precision)


def edge_precision(degraded: TopoGraph, ideal: TopoGraph) -> float:
    if not degraded.edges:
        return 1.0
    return len(degraded.edges & ideal.edges) / len(degraded.edges)


def dump_graph(graph: TopoGraph) -> str:
    """Tab-separated dump: two header lines (object names, steps), then one
    ``t<TAB>name`` line per edge."""
    lines = ["#objects\t" + "\t".join(sorted(graph.object_nodes)),
             "#steps\t" + "\t".join(str(t) for t in graph.time_nodes)]
    lines += [f"{t}\t{name}" for t, name in sorted(graph.edges)]
    return "\n".join(lines) + "\n"


def parse_graph_dump(text: str) -> TopoGraph:
    objects: FrozenSet[str] = frozenset()
    steps: Tuple[int, ...] = ()
    edges = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line:
            continue
        head, _, rest = line.partition("\t")
        if head == "#objects":
            objects = frozenset(x for x in rest.split("\t") if x)
        elif head == "#steps":
            steps = tuple(int(x) for x in rest.split("\t") if x)
        else:
            if not rest:
                raise ValueError(f"line {lineno}: expected 't<TAB>name'")
            edges.add((int(head), rest))
    return TopoGraph(steps, objects, frozenset(edges))
