import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vlnbound.scene import ObservationSequence
from vlnbound.sim import DEFAULT_RHO_GRID
from vlnbound.topograph import (
    TopoGraph,
    dump_graph,
    edge_precision,
    inject_false_positives,
    matching_score,
    parse_graph_dump,
    record_step,
    retained_count,
    truncate,
    truncate_observation,
)


def graph_of(edges):
    g = TopoGraph()
    for t in sorted({t for t, _ in edges}):
        g = record_step(g, t, [n for s, n in edges if s == t])
    return g


@pytest.mark.parametrize("rho, n, k", [
    (0.4, 5, 2), (0.5, 5, 3), (0.0, 5, 0), (1.0, 5, 5), (0.1, 25, 3), (0.3, 10, 3), (0.7, 10, 7),
])
def test_retained_count(rho, n, k):
    assert retained_count(rho, n) == k


def test_truncate_cases():
    seq = list("abcde")
    assert truncate(seq, 0.4) == ["a", "b"]
    assert truncate(seq, 0.5) == ["a", "b", "c"]
    assert truncate(seq, 0.0) == []
    assert truncate(seq, 1.0) == seq
    obs = truncate_observation(ObservationSequence("v0", ("o1", "o2", "o3")), 0.34)
    assert obs.object_ids == ("o1",)
    with pytest.raises(ValueError):
        truncate(seq, 1.1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 50), max_size=40), st.floats(0, 1), st.floats(0, 1))
def test_truncation_nests(items, r1, r2):
    lo, hi = sorted((r1, r2))
    a, b = truncate(items, lo), truncate(items, hi)
    assert b[: len(a)] == a


def test_record_step_cases():
    g = record_step(TopoGraph(), 0, ["chair", "table"])
    assert g.time_nodes == (0,)
    assert g.object_nodes == {"chair", "table"}
    assert g.edges == {(0, "chair"), (0, "table")}
    g2 = record_step(record_step(TopoGraph(), 0, ["chair"]), 1, ["chair"])
    assert len(g2.object_nodes) == 1 and len(g2.edges) == 2
    g3 = record_step(g, 1, [])
    assert g3.time_nodes == (0, 1) and g3.edges == g.edges
    with pytest.raises(ValueError):
        record_step(g, 0, ["x"])


def test_matching_hand_example():
    ideal = graph_of([(0, "chair"), (0, "table"), (1, "table"), (1, "door")])
    degraded = graph_of([(0, "chair"), (1, "table")])
    rep = matching_score(degraded, ideal, 0.5)
    assert rep.s_obj == pytest.approx(2 / 3, abs=1e-12)
    assert rep.s_edge == pytest.approx(0.5, abs=1e-12)
    assert rep.s_match == pytest.approx(7 / 12, abs=1e-12)


def test_matching_endpoints():
    ideal = graph_of([(0, "chair"), (1, "door")])
    full = matching_score(ideal, ideal)
    assert (full.s_obj, full.s_edge, full.s_match) == (1.0, 1.0, 1.0)
    empty = matching_score(record_step(record_step(TopoGraph(), 0, []), 1, []), ideal)
    assert (empty.s_obj, empty.s_edge, empty.s_match) == (0.0, 0.0, 0.0)
    assert empty.precision == 1.0
    with pytest.raises(ValueError):
        matching_score(ideal, TopoGraph())
    with pytest.raises(ValueError):
        matching_score(ideal, ideal, lam=2.0)


def test_lambda_weights_object_recall():
    ideal = graph_of([(0, "a"), (1, "a"), (1, "b")])
    degraded = graph_of([(0, "a")])
    assert matching_score(degraded, ideal, 1.0).s_match == pytest.approx(0.5)
    assert matching_score(degraded, ideal, 0.0).s_match == pytest.approx(1 / 3)


def test_precision_diagnostics():
    ideal = graph_of([(0, "a"), (0, "b")])
    noisy = graph_of([(0, "a"), (0, "b"), (0, "z")])
    rep = matching_score(noisy, ideal)
    assert rep.s_match == 1.0
    assert rep.precision == pytest.approx(2 / 3)
    assert edge_precision(noisy, ideal) == pytest.approx(2 / 3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.sampled_from("abcdefgh"), max_size=6, unique=True), min_size=1, max_size=8))
def test_s_match_monotone_in_rho(frames):
    ideal = TopoGraph()
    for t, names in enumerate(frames):
        ideal = record_step(ideal, t, names)
    if ideal.is_empty():
        return
    scores = []
    for rho in DEFAULT_RHO_GRID:
        g = TopoGraph()
        for t, names in enumerate(frames):
            g = record_step(g, t, truncate(names, rho))
        scores.append(matching_score(g, ideal).s_match)
    assert scores[0] == 0.0 and scores[-1] == 1.0
    assert all(a <= b for a, b in zip(scores, scores[1:]))


def test_false_positive_injection():
    vocab = ["chair", "table", "lamp", "vase", "rug"]
    rng = np.random.default_rng(0)
    assert inject_false_positives(["chair"], vocab, 0.0, rng) == ["chair"]
    out = inject_false_positives(["chair", "table"], vocab, 1.0, np.random.default_rng(4))
    assert out[:2] == ["chair", "table"]
    spurious = out[2:]
    assert len(spurious) == 2 and not set(spurious) & {"chair", "table"}
    out = inject_false_positives(["chair"], vocab, 1.0, rng, true_names=["chair", "lamp", "vase", "rug"])
    assert out == ["chair", "table"]
    with pytest.raises(ValueError):
        inject_false_positives(["chair"], vocab, -0.1, rng)


def test_false_positive_rate_in_expectation():
    vocab = [f"n{i}" for i in range(40)]
    rng = np.random.default_rng(1)
    counts = [len(inject_false_positives(vocab[:10], vocab, 0.25, rng)) - 10 for _ in range(2000)]
    assert np.mean(counts) == pytest.approx(2.5, abs=0.05)


def test_dump_roundtrip():
    g = graph_of([(0, "chair"), (0, "table"), (2, "door")])
    g = record_step(g, 5, [])
    text = dump_graph(g)
    assert text.splitlines()[0] == "#objects\tchair\tdoor\ttable"
    again = parse_graph_dump(text)
    assert again == g
    with pytest.raises(ValueError):
        parse_graph_dump("#objects\n3\n")
