import math
from pathlib import Path

import pytest

from vlnbound.records import RECORD_FIELDS, read_records, records_to_csv, write_records
from vlnbound.scene import load_scene
from vlnbound.sim import run_sweep, slow_grid

FIXTURES = Path(__file__).parent / "fixtures"


def test_fixture_reproduces():
    scene = load_scene(FIXTURES / "scene_minimal.json")
    recs = run_sweep([scene], slow_grid([0.0, 1.0]), "slow")
    assert records_to_csv(recs) == (FIXTURES / "records_minimal.csv").read_text()


def test_zero_recall_fails_inside_threshold():
    recs = read_records(FIXTURES / "records_minimal.csv")
    zero = recs[0].outcome
    assert zero.final_distance < 3.0
    assert not zero.success and zero.failure_reason == "zero recall"


def test_roundtrip(tmp_path):
    recs = read_records(FIXTURES / "records_minimal.csv")
    path = tmp_path / "r.csv"
    write_records(recs, path)
    assert path.read_text() == (FIXTURES / "records_minimal.csv").read_text()


def test_nan_written_blank(tmp_path):
    scene = load_scene(FIXTURES / "scene_minimal.json")
    from vlnbound.sim import fast_grid
    recs = run_sweep([scene], fast_grid([1.0]), "fast")
    text = records_to_csv(recs)
    row = dict(zip(RECORD_FIELDS, text.splitlines()[1].split(",")))
    assert row["s_match"] == ""
    path = tmp_path / "f.csv"
    path.write_text(text)
    assert math.isnan(read_records(path)[0].outcome.s_match)


def test_bad_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("mode,grid_index\nslow,0\n")
    with pytest.raises(ValueError, match="lacks columns"):
        read_records(path)


def test_docs_embed_fixtures():
    doc = (Path(__file__).parents[1] / "docs" / "formats.md").read_text()
    for name in ("records_minimal.csv", "metrics_minimal.csv", "run_minimal.toml"):
        assert (FIXTURES / name).read_text().strip() in doc
