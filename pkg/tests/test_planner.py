import json
import logging

import pytest

from builders import corridor
from vlnbound.planner import (
    LLMPlanner,
    MoveTo,
    PlannerState,
    ScriptedPlanner,
    Stop,
    TopologyView,
    parse_decision,
    scripted_next_action,
    serialize_prompt,
)
from vlnbound.scene import id_key
from vlnbound.topograph import TopoGraph, record_step


def observe(scene, here, graph, t):
    frames = {}
    for facing in (here,) + tuple(sorted(scene.neighbors(here), key=id_key)):
        graph = record_step(graph, t, scene.observed_names(facing))
        frames[facing] = t
        t += 1
    return graph, TopologyView.at(scene, here, frames), t


def trace(scene, planner=None, max_steps=20):
    planner = planner or ScriptedPlanner(max_steps)
    ep = scene.episodes[0]
    state, graph, t = PlannerState.initial(ep.start), TopoGraph(), 0
    actions = []
    while True:
        graph, view, t = observe(scene, state.viewpoint, graph, t)
        decision = planner.next_action(state, graph, ep, view)
        actions.append(decision.action)
        if not isinstance(decision.action, MoveTo):
            return actions
        anchor = state.viewpoint if decision.progress_index > state.progress_index else state.anchor
        nxt = decision.action.viewpoint
        state = PlannerState(nxt, decision.progress_index, state.visited | {nxt}, state.step_count + 1, anchor)


def test_corridor_trace():
    actions = trace(corridor(n=3))
    assert actions == [MoveTo("v1"), MoveTo("v2"), Stop("instruction complete")]


def test_empty_graph_stops_at_start():
    scene = corridor()
    ep = scene.episodes[0]
    view = TopologyView.at(scene, "v0", {"v0": 0, "v1": 1})
    graph = record_step(record_step(TopoGraph(), 0, []), 1, [])
    d = scripted_next_action(PlannerState.initial("v0"), graph, ep, view)
    assert isinstance(d.action, Stop) and d.action.reason == "empty graph"


def test_no_landmark_anywhere_stops():
    scene = corridor(n=3, chair_at=2)
    ep = scene.episodes[0]
    state = PlannerState("v1", 0, frozenset({"v0", "v1", "v2"}), 2, "v0")
    view = TopologyView.at(scene, "v1", {"v1": 0, "v0": 1, "v2": 2})
    graph = record_step(TopoGraph(), 0, ["rug"])
    d = scripted_next_action(state, graph, ep, view)
    assert d.action == Stop("nothing left to explore")


def test_max_steps_stops():
    scene = corridor()
    ep = scene.episodes[0]
    state = PlannerState("v0", 0, frozenset({"v0"}), 5, "v0")
    view = TopologyView.at(scene, "v0", {"v0": 0})
    d = scripted_next_action(state, record_step(TopoGraph(), 0, ["rug"]), ep, view, max_steps=5)
    assert d.action == Stop("max steps")


def test_landmark_at_start_is_not_progress():
    # the landmark seen where progress last advanced must not be re-counted
    scene = corridor(n=3, chair_at=0)
    actions = trace(scene)
    assert actions[0] != Stop("instruction complete")


def test_prompt_format():
    scene = corridor()
    graph = record_step(TopoGraph(), 0, ["chair"])
    text = serialize_prompt(graph, scene.episodes[0], PlannerState.initial("v0"), candidates=["v1"])
    assert "step 0: chair" in text
    assert "candidates: v1" in text
    assert "walk to the chair" in text


def test_parse_decision(caplog):
    scene = corridor()
    assert parse_decision("MOVE v1", "v0", scene) == MoveTo("v1")
    assert parse_decision("I think: move v1.", "v0", scene) == MoveTo("v1")
    assert isinstance(parse_decision("STOP", "v0", scene), Stop)
    with caplog.at_level(logging.WARNING):
        assert isinstance(parse_decision("MOVE v9", "v0", scene), Stop)
        assert isinstance(parse_decision("what?", "v0", scene), Stop)
        assert isinstance(parse_decision("MOVE v1 or STOP", "v0", scene), Stop)
    assert "not adjacent" in caplog.text


class StubResponse:
    def __init__(self, payload, status=200):
        self.payload, self.status = payload, status

    def raise_for_status(self):
        if self.status >= 400:
            raise RuntimeError(f"HTTP {self.status}")

    def json(self):
        return self.payload


class StubSession:
    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers, "timeout": timeout})
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return StubResponse({"choices": [{"message": {"role": "assistant", "content": reply}}]})


def test_llm_wire_format(monkeypatch):
    monkeypatch.setenv("VLNBOUND_LLM_TOKEN", "sekrit")
    scene = corridor()
    session = StubSession(["MOVE v1"])
    planner = LLMPlanner("http://localhost:8000/v1/", model="m", session=session, timeout=7).for_scene(scene)
    view = TopologyView.at(scene, "v0", {"v0": 0, "v1": 1})
    graph = record_step(record_step(TopoGraph(), 0, ["rug"]), 1, ["rug"])
    d = planner.next_action(PlannerState.initial("v0"), graph, scene.episodes[0], view)
    assert d.action == MoveTo("v1")
    (call,) = session.calls
    assert call["url"] == "http://localhost:8000/v1/chat/completions"
    assert call["headers"]["Authorization"] == "Bearer sekrit"
    assert call["timeout"] == 7
    body = call["json"]
    assert body["model"] == "m"
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    assert "candidates: v1" in body["messages"][1]["content"]
    json.dumps(body)


def test_llm_without_token_and_failures(monkeypatch):
    monkeypatch.delenv("VLNBOUND_LLM_TOKEN", raising=False)
    scene = corridor()
    session = StubSession([ConnectionError("down")])
    planner = LLMPlanner("http://x", session=session, scene=scene)
    url, headers, _ = planner.build_request("hi")
    assert "Authorization" not in headers
    view = TopologyView.at(scene, "v0", {"v0": 0})
    d = planner.next_action(PlannerState.initial("v0"), TopoGraph(), scene.episodes[0], view)
    assert d.action == Stop("request failed")


def test_llm_drives_corridor():
    scene = corridor()
    session = StubSession(["MOVE v1", "MOVE v2", "STOP"])
    actions = trace(scene, LLMPlanner("http://x", session=session, scene=scene))
    assert actions == [MoveTo("v1"), MoveTo("v2"), Stop("planner stop")]
